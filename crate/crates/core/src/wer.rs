//! Word error rate by token-level Levenshtein distance.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Transcript {
    pub tokens: Vec<String>,
}

impl Transcript {
    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        Transcript {
            tokens: tokens.into_iter().map(Into::into).collect(),
        }
    }

    /// Whitespace tokenization.
    pub fn parse(text: &str) -> Self {
        Transcript::new(text.split_whitespace())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Minimum number of unit-cost substitutions, deletions and insertions
/// turning `reference` into `hypothesis`.
pub fn edit_distance<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=hypothesis.len()).collect();
    let mut cur = vec![0; hypothesis.len() + 1];
    for (i, r) in reference.iter().enumerate() {
        cur[0] = i + 1;
        for (j, h) in hypothesis.iter().enumerate() {
            let sub = prev[j] + usize::from(r != h);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[hypothesis.len()]
}

/// Edit count and reference length, pooled across utterances by summing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WerStats {
    pub edits: usize,
    pub ref_words: usize,
}

impl WerStats {
    pub fn between(reference: &Transcript, hypothesis: &Transcript) -> Result<WerStats> {
        if reference.is_empty() {
            return Err(Error::param("reference", "empty reference transcript, WER is undefined"));
        }
        Ok(WerStats {
            edits: edit_distance(&reference.tokens, &hypothesis.tokens),
            ref_words: reference.len(),
        })
    }

    pub fn rate(&self) -> f64 {
        self.edits as f64 / self.ref_words as f64
    }
}

impl std::ops::Add for WerStats {
    type Output = WerStats;

    fn add(self, o: WerStats) -> WerStats {
        WerStats {
            edits: self.edits + o.edits,
            ref_words: self.ref_words + o.ref_words,
        }
    }
}

impl std::iter::Sum for WerStats {
    fn sum<I: Iterator<Item = WerStats>>(iter: I) -> Self {
        iter.fold(WerStats::default(), |a, b| a + b)
    }
}

/// `(S + D + I) / |reference|`. May exceed 1.
pub fn wer(reference: &Transcript, hypothesis: &Transcript) -> Result<f64> {
    Ok(WerStats::between(reference, hypothesis)?.rate())
}

/// Total edits over total reference words.
pub fn corpus_wer(stats: impl IntoIterator<Item = WerStats>) -> Option<f64> {
    let total: WerStats = stats.into_iter().sum();
    (total.ref_words > 0).then(|| total.rate())
}

/// Parses `id token token …` lines. Blank lines are skipped; an id with no
/// tokens is an empty transcript.
pub fn parse_keyed_transcripts(text: &str) -> Result<HashMap<String, Transcript>> {
    let mut out = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut words = line.split_whitespace();
        let Some(id) = words.next() else { continue };
        if out.insert(id.to_string(), Transcript::new(words)).is_some() {
            return Err(Error::Format {
                context: format!("transcript line {}", lineno + 1),
                reason: format!("duplicate id `{id}`"),
            });
        }
    }
    Ok(out)
}
