//! Synthetic labeled corpora for desk-scale experiments.
//!
//! Two generation modes:
//!
//! * **phrase mode** — every document carries its class's signature phrase
//!   a few times amid noise tokens; both bag-of-words and windowed models
//!   can learn the classes.
//! * **order mode** — every document contains exactly the same number of
//!   occurrences of every class's signature token pair, but only the true
//!   class's pair is adjacent. Unigram statistics are identical across
//!   classes by construction, so the class is only recoverable from word
//!   order.
//!
//! Generation is deterministic per seed, and the first signature occurrence
//! is always placed within the first `len_min` tokens so a 90th-percentile
//! truncation cannot strip every copy.

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::textprep::RawNote;

/// Per-class generation parameters.
#[derive(Debug, Clone)]
pub struct ClassSpec {
    pub name: String,
    pub count: usize,
    /// Signature phrases (token sequences); phrase mode picks one per
    /// insertion. Order mode derives a token pair per class instead.
    pub phrases: Vec<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub classes: Vec<ClassSpec>,
    /// Noise vocabulary size (tokens `n0..n{M-1}`).
    pub noise_vocab: usize,
    pub len_min: usize,
    pub len_max: usize,
    /// Signature insertions per document (per class pair in order mode).
    pub inserts_per_doc: usize,
    /// Word-order-dependent signal (balanced pair construction).
    pub order_dependent: bool,
    pub seed: u64,
}

/// Class sample counts matching the historical 10-class distribution used
/// throughout the acceptance experiments (total 13140, ~24% in the largest
/// class, <4% in the smallest two).
pub const IMBALANCED_10_CLASS_COUNTS: [usize; 10] =
    [3193, 1955, 1634, 1229, 1158, 1047, 934, 927, 559, 504];

impl SyntheticSpec {
    /// `n_classes` balanced classes with auto-generated trigram signatures.
    pub fn balanced(n_classes: usize, docs_per_class: usize, seed: u64) -> Self {
        let classes = (0..n_classes)
            .map(|k| ClassSpec {
                name: format!("class{k:02}"),
                count: docs_per_class,
                phrases: vec![default_phrase(k, 3)],
            })
            .collect();
        SyntheticSpec {
            classes,
            noise_vocab: 300,
            len_min: 20,
            len_max: 50,
            inserts_per_doc: 2,
            order_dependent: false,
            seed,
        }
    }

    /// The 10-class imbalanced corpus (13140 documents).
    pub fn imbalanced_10_class(seed: u64) -> Self {
        let classes = IMBALANCED_10_CLASS_COUNTS
            .iter()
            .enumerate()
            .map(|(k, &count)| ClassSpec {
                name: format!("disease{k:02}"),
                count,
                phrases: vec![default_phrase(k, 3)],
            })
            .collect();
        SyntheticSpec {
            classes,
            noise_vocab: 300,
            len_min: 18,
            len_max: 34,
            inserts_per_doc: 2,
            order_dependent: false,
            seed,
        }
    }

    /// Balanced corpus whose signal is purely word order.
    pub fn order_dependent(n_classes: usize, docs_per_class: usize, seed: u64) -> Self {
        let mut spec = SyntheticSpec::balanced(n_classes, docs_per_class, seed);
        spec.order_dependent = true;
        spec.noise_vocab = 120;
        spec.len_min = 26;
        spec.len_max = 40;
        spec.inserts_per_doc = 2;
        spec
    }

    pub fn total_docs(&self) -> usize {
        self.classes.iter().map(|c| c.count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::Config("no classes in synthetic spec".into()));
        }
        if self.noise_vocab == 0 || self.len_min == 0 || self.len_max < self.len_min {
            return Err(Error::Config("bad length/vocabulary parameters".into()));
        }
        if self.inserts_per_doc == 0 {
            return Err(Error::Config("inserts_per_doc must be at least 1".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for class in &self.classes {
            if class.count == 0 {
                return Err(Error::Config(format!("class {:?} has no documents", class.name)));
            }
            for phrase in &class.phrases {
                if phrase.is_empty() {
                    return Err(Error::Config("empty signature phrase".into()));
                }
                if !seen.insert(phrase.join(" ")) {
                    return Err(Error::Config(format!(
                        "signature phrase {:?} is shared across classes",
                        phrase.join(" ")
                    )));
                }
                if phrase.len() + 1 > self.len_min {
                    return Err(Error::Config("len_min too small for signature phrases".into()));
                }
            }
        }
        if self.order_dependent {
            // every class pair appears inserts_per_doc times in every doc
            let needed = 2 * self.inserts_per_doc * self.classes.len() + 2;
            if self.len_min < needed {
                return Err(Error::Config(format!(
                    "len_min {} too small for order mode (need ≥ {needed})",
                    self.len_min
                )));
            }
        }
        Ok(())
    }
}

fn default_phrase(class: usize, len: usize) -> Vec<String> {
    (0..len).map(|i| format!("sig{class:02}{}", (b'a' + i as u8) as char)).collect()
}

/// The signature token pair a class uses in order mode.
pub fn order_pair(class: usize) -> (String, String) {
    (format!("siga{class:02}"), format!("sigb{class:02}"))
}

fn noise_token(rng: &mut Rng, vocab: usize) -> String {
    format!("n{}", rng.below(vocab))
}

fn place_phrase(tokens: &mut [String], phrase: &[String], at: usize) {
    for (i, tok) in phrase.iter().enumerate() {
        tokens[at + i] = tok.clone();
    }
}

fn generate_phrase_doc(
    spec: &SyntheticSpec,
    class: &ClassSpec,
    rng: &mut Rng,
) -> Vec<String> {
    let len = spec.len_min + rng.below(spec.len_max - spec.len_min + 1);
    let mut tokens: Vec<String> = (0..len).map(|_| noise_token(rng, spec.noise_vocab)).collect();
    let phrase = &class.phrases[rng.below(class.phrases.len())];
    let p = phrase.len();
    // the first copy always survives truncation
    let first_at = rng.below(spec.len_min - p + 1);
    place_phrase(&mut tokens, phrase, first_at);
    for _ in 1..spec.inserts_per_doc {
        for _attempt in 0..10 {
            let at = rng.below(len - p + 1);
            // avoid clobbering the guaranteed first copy
            if at + p <= first_at || at >= first_at + p {
                place_phrase(&mut tokens, phrase, at);
                break;
            }
        }
    }
    tokens
}

fn generate_order_doc(spec: &SyntheticSpec, true_class: usize, rng: &mut Rng) -> Vec<String> {
    let len = spec.len_min + rng.below(spec.len_max - spec.len_min + 1);
    let mut tokens: Vec<String> = (0..len).map(|_| noise_token(rng, spec.noise_vocab)).collect();
    let mut used = vec![false; len];
    let m = spec.inserts_per_doc;
    // adjacent pairs for the true class; the first stays inside len_min
    for copy in 0..m {
        let mut placed = false;
        for _attempt in 0..500 {
            let bound = if copy == 0 { spec.len_min - 1 } else { len - 1 };
            let at = rng.below(bound);
            if !used[at] && !used[at + 1] {
                let (a, b) = order_pair(true_class);
                tokens[at] = a;
                tokens[at + 1] = b;
                used[at] = true;
                used[at + 1] = true;
                placed = true;
                break;
            }
        }
        assert!(placed, "could not place signature pair (len {len})");
    }
    // separated singles for every other class, identical counts
    for k in 0..spec.classes.len() {
        if k == true_class {
            continue;
        }
        let (a, b) = order_pair(k);
        for tok in [a, b].into_iter().cycle().take(2 * m) {
            let mut placed = false;
            for _attempt in 0..1000 {
                let at = rng.below(len);
                if !used[at] {
                    tokens[at] = tok.clone();
                    used[at] = true;
                    placed = true;
                    break;
                }
            }
            assert!(placed, "could not place signature token (len {len})");
        }
    }
    // break any accidental adjacency of a wrong-class pair: move the second
    // token to a free slot that does not create a new adjacency
    for _pass in 0..100 {
        let mut violation = None;
        'scan: for i in 0..len - 1 {
            for k in 0..spec.classes.len() {
                if k == true_class {
                    continue;
                }
                let (a, b) = order_pair(k);
                if tokens[i] == a && tokens[i + 1] == b {
                    violation = Some((i, a));
                    break 'scan;
                }
            }
        }
        let Some((i, a)) = violation else { break };
        let safe = (0..len).find(|&j| !used[j] && (j == 0 || tokens[j - 1] != a));
        match safe {
            Some(j) => {
                tokens.swap(i + 1, j);
                used.swap(i + 1, j);
            }
            None => {
                // no safe slot for the b token: move the a token instead
                let j = (0..len)
                    .find(|&j| !used[j] && (j + 1 >= len || !tokens[j + 1].starts_with("sigb")))
                    .expect("order mode needs free noise slots; validated");
                tokens.swap(i, j);
                used.swap(i, j);
            }
        }
    }
    tokens
}

/// Generate the corpus as raw notes (`text` is the space-joined tokens).
pub fn generate(spec: &SyntheticSpec) -> Result<Vec<RawNote>> {
    spec.validate()?;
    let mut rng = Rng::with_stream(spec.seed, 0x53594e54); // "SYNT"
    let mut notes = Vec::with_capacity(spec.total_docs());
    let mut seq = 0usize;
    for (k, class) in spec.classes.iter().enumerate() {
        for _ in 0..class.count {
            let tokens = if spec.order_dependent {
                generate_order_doc(spec, k, &mut rng)
            } else {
                generate_phrase_doc(spec, class, &mut rng)
            };
            notes.push(RawNote {
                id: format!("syn{seq:06}"),
                text: tokens.join(" "),
                label: Some(class.name.clone()),
                sections: None,
            });
            seq += 1;
        }
    }
    Ok(notes)
}

/// Write the corpus as JSON-lines `{"id", "text", "label"}`.
pub fn write_corpus(path: &std::path::Path, notes: &[RawNote]) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for note in notes {
        serde_json::to_writer(&mut out, note)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
