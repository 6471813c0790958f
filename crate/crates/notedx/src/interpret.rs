//! Filter inspection: rank every n-gram window in a corpus by its
//! convolution activation, per filter, and render the top lists.
//!
//! Only windows made of exactly H real tokens are ranked: positions whose
//! window would overlap the convolution's zero rows or the document's right
//! padding are skipped, so every reported n-gram is a genuine phrase from
//! the text.

use serde::{Deserialize, Serialize};

use crate::cnn::CnnModel;
use crate::error::{Error, Result};
use crate::nn::{conv1d_same, embedding_lookup};
use crate::parallel;
use crate::rng::Rng;
use crate::textprep::Document;

const FILTER_PICK_STREAM: u64 = 0x46494c54; // "FILT"

/// One scored n-gram window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramActivation {
    /// Filter bank index (by window size).
    pub bank: usize,
    /// Filter index within the bank.
    pub filter: usize,
    pub doc_id: String,
    /// Window start, in token positions.
    pub position: usize,
    /// Space-joined window tokens; always exactly H tokens.
    pub ngram: String,
    /// Post-activation convolution output at this window.
    pub score: f64,
}

/// Descending top-N list for one filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRanking {
    pub bank: usize,
    pub filter: usize,
    /// Window size H of this filter.
    pub h: usize,
    pub entries: Vec<NgramActivation>,
}

fn merge_top_n(target: &mut Vec<NgramActivation>, mut extra: Vec<NgramActivation>, top_n: usize) {
    target.append(&mut extra);
    target.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
            .then_with(|| a.position.cmp(&b.position))
    });
    target.truncate(top_n);
}

/// Global top-`top_n` windows per selected `(bank, filter)` pair over the
/// corpus, ties broken by (document id, position). With `selection = None`
/// every filter is ranked.
pub fn rank_ngrams(
    model: &CnnModel,
    corpus: &[Document],
    top_n: usize,
    selection: Option<&[(usize, usize)]>,
) -> Result<Vec<FilterRanking>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let selected: Vec<(usize, usize)> = match selection {
        Some(pairs) => {
            for &(b, f) in pairs {
                if b >= model.banks.len() || f >= model.banks[b].f {
                    return Err(Error::InvalidArgument(format!(
                        "no filter ({b}, {f}) in this model"
                    )));
                }
            }
            pairs.to_vec()
        }
        None => model
            .banks
            .iter()
            .enumerate()
            .flat_map(|(b, bank)| (0..bank.f).map(move |f| (b, f)))
            .collect(),
    };

    // per-document candidates, folded into running top-N lists per filter
    let per_doc = |doc: &Document| -> Vec<Vec<NgramActivation>> {
        let ids = model.token_ids(doc);
        let real_len = doc.tokens.len().min(model.l_max);
        let embedded = embedding_lookup(&ids, &model.embedding).expect("ids validated");
        let mut out: Vec<Vec<NgramActivation>> = vec![Vec::new(); selected.len()];
        for (bi, bank) in model.banks.iter().enumerate() {
            if selected.iter().all(|&(b, _)| b != bi) {
                continue;
            }
            if real_len < bank.h {
                continue;
            }
            let conv = conv1d_same(&embedded, bank, model.config.activation)
                .expect("widths validated");
            let pad_left = bank.h / 2;
            for (si, &(b, f)) in selected.iter().enumerate() {
                if b != bi {
                    continue;
                }
                // window start w = t - pad_left must satisfy w >= 0 and
                // w + h <= real_len
                for w in 0..=(real_len - bank.h) {
                    let t = w + pad_left;
                    let score = conv.row(t)[f];
                    out[si].push(NgramActivation {
                        bank: b,
                        filter: f,
                        doc_id: doc.id.clone(),
                        position: w,
                        ngram: doc.tokens[w..w + bank.h].join(" "),
                        score,
                    });
                }
                merge_top_n(&mut out[si], Vec::new(), top_n);
            }
        }
        out
    };

    let merged = parallel::fold_chunks(
        corpus,
        model.config.deterministic,
        || vec![Vec::new(); selected.len()],
        |acc: &mut Vec<Vec<NgramActivation>>, _, doc| {
            let candidates = per_doc(doc);
            for (slot, extra) in acc.iter_mut().zip(candidates) {
                merge_top_n(slot, extra, top_n);
            }
        },
        |mut a, b| {
            for (slot, extra) in a.iter_mut().zip(b) {
                merge_top_n(slot, extra, top_n);
            }
            a
        },
    );

    Ok(selected
        .iter()
        .zip(merged)
        .map(|(&(b, f), entries)| FilterRanking {
            bank: b,
            filter: f,
            h: model.banks[b].h,
            entries,
        })
        .collect())
}

/// Seeded choice of `per_size` distinct filters from every bank.
pub fn sample_filters(model: &CnnModel, per_size: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = Rng::with_stream(seed, FILTER_PICK_STREAM);
    let mut picks = Vec::new();
    for (b, bank) in model.banks.iter().enumerate() {
        let mut indices: Vec<usize> = (0..bank.f).collect();
        rng.shuffle(&mut indices);
        for &f in indices.iter().take(per_size.min(bank.f)) {
            picks.push((b, f));
        }
    }
    picks
}

/// Tab-separated table: one column per filter, one row per rank.
pub fn render_table(rankings: &[FilterRanking]) -> String {
    if rankings.is_empty() {
        return String::new();
    }
    let mut out = String::new();
    let header: Vec<String> = rankings
        .iter()
        .map(|r| format!("{}-gram filter {}", r.h, r.filter))
        .collect();
    out.push_str(&header.join("\t"));
    out.push('\n');
    let depth = rankings.iter().map(|r| r.entries.len()).max().unwrap_or(0);
    for row in 0..depth {
        let cells: Vec<&str> = rankings
            .iter()
            .map(|r| r.entries.get(row).map(|e| e.ngram.as_str()).unwrap_or(""))
            .collect();
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    out
}

/// JSON form of the rankings (round-trips through serde).
pub fn render_json(rankings: &[FilterRanking]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rankings)?)
}
