//! Skip-gram word embeddings with negative sampling and subword n-grams.
//!
//! Training follows the usual recipe: dynamic context windows, frequent-word
//! subsampling, unigram^0.75 noise sampling, and a linearly decaying learning
//! rate. The full-softmax conditional (which negative sampling approximates)
//! is kept as [`exact_conditional_distribution`] so tiny vocabularies can be
//! checked against it.
//!
//! Subwords: every vocabulary word contributes character n-grams (with `<`
//! `>` boundary markers) hashed into a fixed bucket space. A word's vector is
//! its own row plus the mean of its n-gram rows; out-of-vocabulary words use
//! the n-gram mean alone, so any string gets a vector. Bucket rows are lazily
//! materialized: untouched buckets keep their seed-derived initialization,
//! which [`embed`] regenerates on demand instead of storing ~2M rows.
//!
//! Parallel training is hogwild-style (unsynchronized relaxed atomics over
//! sentence shards). With `deterministic` set, training runs single-threaded
//! and is bit-reproducible; per-sentence RNG streams are derived from
//! `(seed, epoch, sentence index)`, so the sampled pairs are identical either
//! way and only float accumulation order differs.

use std::collections::HashMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::binio::{BinReader, BinWriter};
use crate::error::{Error, Result};
use crate::parallel;
use crate::rng::Rng;
use crate::vocab::{Vocabulary, PAD_INDEX, PAD_TOKEN, UNK_INDEX};
use crate::FORMAT_VERSION;

const EMBED_MAGIC: &[u8; 4] = b"NDXE";
const WORD_INIT_STREAM: u64 = 0x574f5244; // "WORD"
const GRAM_INIT_STREAM: u64 = 0x4752414d; // "GRAM"
const SENT_STREAM: u64 = 0x53454e54; // "SENT"

/// Hyperparameters for skip-gram training.
#[derive(Debug, Clone)]
pub struct SkipgramConfig {
    /// Embedding dimension E.
    pub dim: usize,
    /// Maximum context offset c; actual windows are sampled in `1..=window`.
    pub window: usize,
    /// Negative samples per positive pair.
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly to 1e-4 of itself.
    pub learning_rate: f64,
    /// Frequent-word subsampling threshold (0 disables).
    pub subsample: f64,
    pub min_count: u64,
    pub min_n: usize,
    pub max_n: usize,
    /// Subword hash bucket count.
    pub buckets: usize,
    pub seed: u64,
    /// Single-threaded, bit-reproducible training.
    pub deterministic: bool,
}

impl Default for SkipgramConfig {
    fn default() -> Self {
        SkipgramConfig {
            dim: 128,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            subsample: 1e-4,
            min_count: 2,
            min_n: 3,
            max_n: 6,
            buckets: 1 << 21,
            seed: 1,
            deterministic: false,
        }
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Hash buckets of the character n-grams of `word` (with boundary markers).
pub fn subword_buckets(word: &str, min_n: usize, max_n: usize, buckets: usize) -> Vec<u64> {
    let padded: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut out = Vec::new();
    let mut buf = String::new();
    for n in min_n..=max_n {
        if n > padded.len() {
            break;
        }
        for start in 0..=padded.len() - n {
            buf.clear();
            buf.extend(&padded[start..start + n]);
            out.push(fnv1a64(buf.as_bytes()) % buckets as u64);
        }
    }
    out
}

fn init_row(base_seed: u64, stream: u64, row: u64, dim: usize) -> Vec<f64> {
    let mut rng = Rng::with_stream(base_seed ^ stream, row);
    let half = 0.5 / dim as f64;
    (0..dim).map(|_| rng.uniform(-half, half)).collect()
}

/// Trained word and context vectors plus the subword bucket table.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    pub vocab: Vocabulary,
    pub dim: usize,
    pub min_n: usize,
    pub max_n: usize,
    pub buckets: usize,
    pub seed: u64,
    /// V×E input vectors (the word's own row, before subword composition).
    word_vecs: Vec<f64>,
    /// V×E output (context) vectors.
    ctx_vecs: Vec<f64>,
    /// Bucket ids that back the trained n-gram rows, ascending.
    ngram_ids: Vec<u64>,
    /// len(ngram_ids)×E trained n-gram rows.
    ngram_vecs: Vec<f64>,
    bucket_row: HashMap<u64, usize>,
    /// Per vocabulary word, rows into `ngram_vecs` (empty for pad/unk).
    word_ngram_rows: Vec<Vec<u32>>,
}

impl EmbeddingStore {
    /// A store with only the reserved tokens. Useful as a placeholder and for
    /// exercising the file format; real stores come from [`train_skipgram`].
    pub fn empty(dim: usize) -> Self {
        let vocab = Vocabulary::from_parts(
            vec![PAD_TOKEN.to_string(), crate::vocab::UNK_TOKEN.to_string()],
            vec![0, 0],
        );
        EmbeddingStore {
            vocab,
            dim,
            min_n: 3,
            max_n: 6,
            buckets: 1 << 21,
            seed: 0,
            word_vecs: vec![0.0; 2 * dim],
            ctx_vecs: vec![0.0; 2 * dim],
            ngram_ids: Vec::new(),
            ngram_vecs: Vec::new(),
            bucket_row: HashMap::new(),
            word_ngram_rows: vec![Vec::new(), Vec::new()],
        }
    }

    fn word_row(&self, idx: usize) -> &[f64] {
        &self.word_vecs[idx * self.dim..(idx + 1) * self.dim]
    }

    /// Output (context) vector of a vocabulary word.
    pub fn context_vector(&self, idx: usize) -> &[f64] {
        &self.ctx_vecs[idx * self.dim..(idx + 1) * self.dim]
    }

    fn ngram_row(&self, row: u32) -> &[f64] {
        let r = row as usize;
        &self.ngram_vecs[r * self.dim..(r + 1) * self.dim]
    }

    /// Trained row for a bucket, or its seed-derived initialization if the
    /// bucket was never touched by training.
    fn bucket_vector(&self, bucket: u64) -> Vec<f64> {
        match self.bucket_row.get(&bucket) {
            Some(&row) => self.ngram_row(row as u32).to_vec(),
            None => init_row(self.seed, GRAM_INIT_STREAM, bucket, self.dim),
        }
    }

    /// The embedding of any string. Total: pad → zeros, in-vocabulary →
    /// own row + mean of n-gram rows, anything else → mean of n-gram rows
    /// (zeros if the string is too short to produce any).
    pub fn embed(&self, word: &str) -> Vec<f64> {
        if word == PAD_TOKEN {
            return vec![0.0; self.dim];
        }
        if let Some(idx) = self.vocab.get(word) {
            let mut v = self.word_row(idx).to_vec();
            let rows = &self.word_ngram_rows[idx];
            if !rows.is_empty() {
                let scale = 1.0 / rows.len() as f64;
                for &r in rows {
                    for (acc, x) in v.iter_mut().zip(self.ngram_row(r)) {
                        *acc += x * scale;
                    }
                }
            }
            return v;
        }
        let grams = subword_buckets(word, self.min_n, self.max_n, self.buckets);
        let mut v = vec![0.0; self.dim];
        if grams.is_empty() {
            return v;
        }
        let scale = 1.0 / grams.len() as f64;
        for g in grams {
            for (acc, x) in v.iter_mut().zip(self.bucket_vector(g)) {
                *acc += x * scale;
            }
        }
        v
    }

    /// Binary export; bit-exact round trip.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BinWriter::new(BufWriter::new(std::fs::File::create(path)?));
        w.magic(EMBED_MAGIC)?;
        w.u32(FORMAT_VERSION)?;
        w.usize(self.dim)?;
        w.usize(self.min_n)?;
        w.usize(self.max_n)?;
        w.usize(self.buckets)?;
        w.u64(self.seed)?;
        w.usize(self.vocab.len())?;
        for i in 0..self.vocab.len() {
            w.string(self.vocab.word(i))?;
            w.u64(self.vocab.count(i))?;
        }
        w.f64_slice(&self.word_vecs)?;
        w.f64_slice(&self.ctx_vecs)?;
        w.u64_slice(&self.ngram_ids)?;
        w.f64_slice(&self.ngram_vecs)?;
        w.finish()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut r = BinReader::new(std::io::BufReader::new(file), "embedding store");
        r.expect_magic(EMBED_MAGIC)?;
        r.expect_version(FORMAT_VERSION)?;
        let dim = r.usize()?;
        let min_n = r.usize()?;
        let max_n = r.usize()?;
        let buckets = r.usize()?;
        let seed = r.u64()?;
        let v = r.usize()?;
        let mut words = Vec::with_capacity(v.min(1 << 24));
        let mut counts = Vec::with_capacity(v.min(1 << 24));
        for _ in 0..v {
            words.push(r.string()?);
            counts.push(r.u64()?);
        }
        let vocab = Vocabulary::from_parts(words, counts);
        let word_vecs = r.f64_vec()?;
        let ctx_vecs = r.f64_vec()?;
        let ngram_ids = r.u64_vec()?;
        let ngram_vecs = r.f64_vec()?;
        if word_vecs.len() != v * dim || ctx_vecs.len() != v * dim {
            return Err(Error::Corrupt("embedding store: matrix size".into()));
        }
        if ngram_vecs.len() != ngram_ids.len() * dim {
            return Err(Error::Corrupt("embedding store: ngram table size".into()));
        }
        let bucket_row = ngram_ids
            .iter()
            .enumerate()
            .map(|(row, &id)| (id, row))
            .collect();
        let word_ngram_rows = index_word_ngrams(&vocab, min_n, max_n, buckets, &bucket_row);
        Ok(EmbeddingStore {
            vocab,
            dim,
            min_n,
            max_n,
            buckets,
            seed,
            word_vecs,
            ctx_vecs,
            ngram_ids,
            ngram_vecs,
            bucket_row,
            word_ngram_rows,
        })
    }

    /// Text export for inspection: header `V E`, then one `word v1..vE` line
    /// per vocabulary word with the composed vector.
    pub fn save_text(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "{} {}", self.vocab.len(), self.dim)?;
        for i in 0..self.vocab.len() {
            let word = self.vocab.word(i);
            write!(out, "{word}")?;
            for v in self.embed(word) {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Map every vocabulary word (except pad/unk) to rows in the trained
/// n-gram table; words whose buckets are absent from the table contribute
/// nothing here (their vectors fall back to seed-derived rows on query).
fn index_word_ngrams(
    vocab: &Vocabulary,
    min_n: usize,
    max_n: usize,
    buckets: usize,
    bucket_row: &HashMap<u64, usize>,
) -> Vec<Vec<u32>> {
    (0..vocab.len())
        .map(|i| {
            if i == PAD_INDEX || i == UNK_INDEX {
                return Vec::new();
            }
            subword_buckets(vocab.word(i), min_n, max_n, buckets)
                .into_iter()
                .filter_map(|b| bucket_row.get(&b).map(|&r| r as u32))
                .collect()
        })
        .collect()
}

// -- negative-sampling objective ------------------------------------------------

#[inline]
fn sigmoid(x: f64) -> f64 {
    let x = x.clamp(-30.0, 30.0);
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Loss of one (center, positive, negatives) triple given the composed input
/// vector `h`: `-ln σ(u_pos·h) - Σ ln σ(-u_neg·h)`.
pub fn pair_loss(h: &[f64], u_pos: &[f64], u_negs: &[&[f64]]) -> f64 {
    let mut loss = -sigmoid(dot(u_pos, h)).max(1e-12).ln();
    for u in u_negs {
        loss -= (1.0 - sigmoid(dot(u, h))).max(1e-12).ln();
    }
    loss
}

/// Analytic gradients of [`pair_loss`] with respect to `h`, `u_pos`, and each
/// negative output vector.
pub fn pair_grads(h: &[f64], u_pos: &[f64], u_negs: &[&[f64]]) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let dim = h.len();
    let mut g_h = vec![0.0; dim];
    let s = sigmoid(dot(u_pos, h));
    let coef = s - 1.0; // d/dx of -ln σ(x)
    let g_pos: Vec<f64> = h.iter().map(|&x| coef * x).collect();
    for (g, &u) in g_h.iter_mut().zip(u_pos) {
        *g += coef * u;
    }
    let mut g_negs = Vec::with_capacity(u_negs.len());
    for u in u_negs {
        let s = sigmoid(dot(u, h));
        let coef = s; // d/dx of -ln σ(-x)
        g_negs.push(h.iter().map(|&x| coef * x).collect());
        for (g, &uv) in g_h.iter_mut().zip(*u) {
            *g += coef * uv;
        }
    }
    (g_h, g_pos, g_negs)
}

/// The exact full-softmax conditional `P(o | center)` over real vocabulary
/// words, using composed input vectors and output vectors. Intended for tiny
/// vocabularies as a normalization oracle for what the sampler approximates.
pub fn exact_conditional_distribution(store: &EmbeddingStore, center: &str) -> Result<Vec<f64>> {
    let v_real = store.vocab.len().saturating_sub(2);
    if v_real == 0 {
        return Err(Error::InsufficientData("vocabulary has no real words".into()));
    }
    let h = store.embed(center);
    let logits: Vec<f64> = (2..store.vocab.len())
        .map(|o| dot(store.context_vector(o), &h))
        .collect();
    Ok(crate::nn::softmax(&logits))
}

// -- training --------------------------------------------------------------------

struct AtomicMatrix {
    cells: Vec<AtomicU64>,
}

impl AtomicMatrix {
    fn from_vec(v: Vec<f64>) -> Self {
        AtomicMatrix {
            cells: v.into_iter().map(|x| AtomicU64::new(x.to_bits())).collect(),
        }
    }

    #[inline]
    fn load(&self, i: usize) -> f64 {
        f64::from_bits(self.cells[i].load(Ordering::Relaxed))
    }

    #[inline]
    fn add(&self, i: usize, delta: f64) {
        let cell = &self.cells[i];
        let cur = f64::from_bits(cell.load(Ordering::Relaxed));
        cell.store((cur + delta).to_bits(), Ordering::Relaxed);
    }

    fn into_vec(self) -> Vec<f64> {
        self.cells
            .into_iter()
            .map(|c| f64::from_bits(c.into_inner()))
            .collect()
    }
}

struct TrainState {
    dim: usize,
    word: AtomicMatrix,
    ctx: AtomicMatrix,
    gram: AtomicMatrix,
    /// rows into `gram` per word
    word_grams: Vec<Vec<u32>>,
    /// cumulative unigram^0.75 over real word indices
    noise_cdf: Vec<f64>,
    keep_prob: Vec<f64>,
    processed: AtomicU64,
    total_tokens: u64,
}

impl TrainState {
    fn sample_negative(&self, rng: &mut Rng) -> usize {
        let x = rng.next_f64() * self.noise_cdf[self.noise_cdf.len() - 1];
        let pos = self.noise_cdf.partition_point(|&c| c < x);
        2 + pos.min(self.noise_cdf.len() - 1)
    }

    /// Compose the input vector of `word`: own row + mean of n-gram rows.
    fn compose(&self, word: usize, out: &mut [f64]) {
        let base = word * self.dim;
        for (e, o) in out.iter_mut().enumerate() {
            *o = self.word.load(base + e);
        }
        let rows = &self.word_grams[word];
        if rows.is_empty() {
            return;
        }
        let scale = 1.0 / rows.len() as f64;
        for &r in rows {
            let gbase = r as usize * self.dim;
            for (e, o) in out.iter_mut().enumerate() {
                *o += self.gram.load(gbase + e) * scale;
            }
        }
    }

    /// One positive pair plus sampled negatives; returns the pair loss.
    #[allow(clippy::too_many_arguments, clippy::needless_range_loop)]
    fn train_pair(
        &self,
        center: usize,
        context: usize,
        negatives: usize,
        lr: f64,
        rng: &mut Rng,
        h: &mut [f64],
        g_h: &mut [f64],
    ) -> f64 {
        self.compose(center, h);
        g_h.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for k in 0..=negatives {
            let (target, label) = if k == 0 {
                (context, 1.0)
            } else {
                let mut t = self.sample_negative(rng);
                let mut guard = 0;
                while t == context && guard < 8 {
                    t = self.sample_negative(rng);
                    guard += 1;
                }
                if t == context {
                    continue;
                }
                (t, 0.0)
            };
            let ubase = target * self.dim;
            let mut d = 0.0;
            for e in 0..self.dim {
                d += self.ctx.load(ubase + e) * h[e];
            }
            let s = sigmoid(d);
            loss -= if label == 1.0 {
                s.max(1e-12).ln()
            } else {
                (1.0 - s).max(1e-12).ln()
            };
            let g = (label - s) * lr;
            for e in 0..self.dim {
                let u = self.ctx.load(ubase + e);
                g_h[e] += g * u;
                self.ctx.add(ubase + e, g * h[e]);
            }
        }
        // distribute the input-side gradient over the word row and its n-grams
        let wbase = center * self.dim;
        for e in 0..self.dim {
            self.word.add(wbase + e, g_h[e]);
        }
        let rows = &self.word_grams[center];
        if !rows.is_empty() {
            let scale = 1.0 / rows.len() as f64;
            for &r in rows {
                let gbase = r as usize * self.dim;
                for e in 0..self.dim {
                    self.gram.add(gbase + e, g_h[e] * scale);
                }
            }
        }
        loss
    }
}

fn sentence_rng(seed: u64, epoch: usize, sentence: usize) -> Rng {
    Rng::with_stream(seed ^ SENT_STREAM, (epoch as u64) << 40 | sentence as u64)
}

/// Per-epoch mean pair loss alongside the trained store.
pub struct SkipgramOutcome {
    pub store: EmbeddingStore,
    pub epoch_losses: Vec<f64>,
}

/// Train skip-gram embeddings over tokenized sentences.
pub fn train_skipgram(sentences: &[Vec<String>], config: &SkipgramConfig) -> Result<SkipgramOutcome> {
    if config.dim < 2 {
        return Err(Error::InvalidArgument(format!(
            "embedding dimension must be at least 2, got {}",
            config.dim
        )));
    }
    if sentences.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let vocab = Vocabulary::build(
        sentences.iter().map(|s| s.iter().map(String::as_str)),
        config.min_count,
    )?;
    if vocab.len() < 4 {
        return Err(Error::InsufficientData(format!(
            "{} words after pruning; need at least 2",
            vocab.len() - 2
        )));
    }
    let v = vocab.len();
    let dim = config.dim;

    // subword tables over the vocabulary
    let mut bucket_row: HashMap<u64, usize> = HashMap::new();
    let mut ngram_ids: Vec<u64> = Vec::new();
    for i in 2..v {
        for b in subword_buckets(vocab.word(i), config.min_n, config.max_n, config.buckets) {
            bucket_row.entry(b).or_insert_with(|| {
                ngram_ids.push(b);
                ngram_ids.len() - 1
            });
        }
    }
    // keep rows in ascending bucket order so files and init are canonical
    ngram_ids.sort_unstable();
    let bucket_row: HashMap<u64, usize> = ngram_ids
        .iter()
        .enumerate()
        .map(|(row, &id)| (id, row))
        .collect();
    let word_grams = index_word_ngrams(&vocab, config.min_n, config.max_n, config.buckets, &bucket_row);

    let mut word_init = vec![0.0; v * dim];
    for i in 2..v {
        word_init[i * dim..(i + 1) * dim]
            .copy_from_slice(&init_row(config.seed, WORD_INIT_STREAM, i as u64, dim));
    }
    let mut gram_init = vec![0.0; ngram_ids.len() * dim];
    for (row, &id) in ngram_ids.iter().enumerate() {
        gram_init[row * dim..(row + 1) * dim]
            .copy_from_slice(&init_row(config.seed, GRAM_INIT_STREAM, id, dim));
    }

    let noise_cdf: Vec<f64> = {
        let mut acc = 0.0;
        (2..v)
            .map(|i| {
                acc += (vocab.count(i) as f64).powf(0.75);
                acc
            })
            .collect()
    };
    let total_tokens = vocab.total_count().max(1);
    let keep_prob: Vec<f64> = (0..v)
        .map(|i| {
            if i < 2 || config.subsample <= 0.0 {
                return 1.0;
            }
            let f = vocab.count(i) as f64 / total_tokens as f64;
            let t = config.subsample;
            ((t / f).sqrt() + t / f).min(1.0)
        })
        .collect();

    let state = TrainState {
        dim,
        word: AtomicMatrix::from_vec(word_init),
        ctx: AtomicMatrix::from_vec(vec![0.0; v * dim]),
        gram: AtomicMatrix::from_vec(gram_init),
        word_grams,
        noise_cdf,
        keep_prob,
        processed: AtomicU64::new(0),
        total_tokens: total_tokens * config.epochs.max(1) as u64,
    };

    // token ids per sentence, resolved once
    let id_sentences: Vec<Vec<usize>> = sentences
        .iter()
        .map(|s| s.iter().filter_map(|t| vocab.get(t)).filter(|&i| i >= 2).collect())
        .collect();

    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let (loss_sum, pair_count) = parallel::fold_chunks(
            &id_sentences,
            config.deterministic,
            || (0.0f64, 0u64),
            |acc, sent_idx, sentence| {
                if sentence.is_empty() {
                    return;
                }
                let mut rng = sentence_rng(config.seed, epoch, sent_idx);
                let mut h = vec![0.0; dim];
                let mut g_h = vec![0.0; dim];
                let kept: Vec<usize> = sentence
                    .iter()
                    .copied()
                    .filter(|&w| rng.next_f64() < state.keep_prob[w])
                    .collect();
                let done = state
                    .processed
                    .fetch_add(sentence.len() as u64, Ordering::Relaxed);
                let progress = done as f64 / (state.total_tokens as f64 + 1.0);
                let lr = config.learning_rate * (1.0 - progress).max(1e-4);
                for (pos, &center) in kept.iter().enumerate() {
                    let b = 1 + rng.below(config.window);
                    let lo = pos.saturating_sub(b);
                    let hi = (pos + b).min(kept.len() - 1);
                    for (j, &context) in kept.iter().enumerate().take(hi + 1).skip(lo) {
                        if j == pos {
                            continue;
                        }
                        acc.0 += state.train_pair(
                            center,
                            context,
                            config.negatives,
                            lr,
                            &mut rng,
                            &mut h,
                            &mut g_h,
                        );
                        acc.1 += 1;
                    }
                }
            },
            |a, b| (a.0 + b.0, a.1 + b.1),
        );
        epoch_losses.push(if pair_count > 0 {
            loss_sum / pair_count as f64
        } else {
            0.0
        });
    }

    let word_vecs = state.word.into_vec();
    let ctx_vecs = state.ctx.into_vec();
    let ngram_vecs = state.gram.into_vec();
    let word_ngram_rows =
        index_word_ngrams(&vocab, config.min_n, config.max_n, config.buckets, &bucket_row);
    Ok(SkipgramOutcome {
        store: EmbeddingStore {
            vocab,
            dim,
            min_n: config.min_n,
            max_n: config.max_n,
            buckets: config.buckets,
            seed: config.seed,
            word_vecs,
            ctx_vecs,
            ngram_ids,
            ngram_vecs,
            bucket_row,
            word_ngram_rows,
        },
        epoch_losses,
    })
}

/// Read tokenized sentences for embedding training from JSON-lines: objects
/// with a `tokens` array are used directly, otherwise `text` is cleaned with
/// the default rules.
pub fn read_training_sentences(path: &Path) -> Result<Vec<Vec<String>>> {
    let file = std::fs::File::open(path)?;
    let mut sentences = Vec::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| Error::Corrupt(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        if let Some(tokens) = value.get("tokens").and_then(|t| t.as_array()) {
            sentences.push(
                tokens
                    .iter()
                    .filter_map(|t| t.as_str().map(String::from))
                    .collect(),
            );
        } else if let Some(text) = value.get("text").and_then(|t| t.as_str()) {
            let raw = crate::textprep::RawNote {
                id: lineno.to_string(),
                text: text.to_string(),
                label: None,
                sections: None,
            };
            sentences.push(crate::textprep::clean_note_tokens(&raw, &[]));
        }
    }
    Ok(sentences)
}
