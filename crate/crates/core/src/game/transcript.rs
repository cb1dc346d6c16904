use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::domain::DomainSpec;
use super::query::{Query, QueryDigest};
use super::GameResult;

/// Whether full query objects are kept alongside digests.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TranscriptMode {
    #[default]
    Full,
    DigestOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Round {
    pub digest: QueryDigest,
    pub query: Option<Query>,
    pub answer: f64,
}

/// Messages exchanged between analyst and mechanism.
#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub n: usize,
    pub ell: usize,
    pub domain: DomainSpec,
    pub mode: TranscriptMode,
    pub rounds: Vec<Round>,
}

impl Transcript {
    pub fn new(n: usize, ell: usize, domain: DomainSpec, mode: TranscriptMode) -> Self {
        Self {
            n,
            ell,
            domain,
            mode,
            rounds: Vec::with_capacity(ell.min(1 << 16)),
        }
    }

    pub fn push(&mut self, query: &Query, answer: f64) {
        let query_copy = match self.mode {
            TranscriptMode::Full => Some(query.clone()),
            TranscriptMode::DigestOnly => None,
        };
        self.rounds.push(Round {
            digest: query.digest(),
            query: query_copy,
            answer,
        });
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn answers(&self) -> impl Iterator<Item = f64> + '_ {
        self.rounds.iter().map(|r| r.answer)
    }

    pub fn last_answer(&self) -> Option<f64> {
        self.rounds.last().map(|r| r.answer)
    }

    /// Hash over public parameters, query digests and answer bits. Two
    /// transcripts are message-for-message equal iff their fingerprints are.
    pub fn fingerprint(&self) -> QueryDigest {
        let mut h = Sha256::new();
        h.update(b"ada-arena/transcript");
        h.update((self.n as u64).to_le_bytes());
        h.update((self.ell as u64).to_le_bytes());
        self.domain.write_digest(&mut |b| h.update(b));
        for r in &self.rounds {
            h.update(r.digest);
            h.update(r.answer.to_bits().to_le_bytes());
        }
        h.finalize().into()
    }

    /// Same messages, ignoring whether full queries were retained.
    pub fn same_messages(&self, other: &Transcript) -> bool {
        self.fingerprint() == other.fingerprint()
    }
}

/// Renders a transcript and its result as the line-oriented log:
/// `#`-prefixed header lines, then one tab-separated line per round with
/// index, query digest, answer, true answer and error.
pub fn write_log(transcript: &Transcript, result: &GameResult, mechanism: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# ada-arena transcript");
    let _ = writeln!(out, "# n={}", transcript.n);
    let _ = writeln!(out, "# ell={}", transcript.ell);
    let _ = writeln!(out, "# domain={}", transcript.domain);
    let _ = writeln!(out, "# mechanism={mechanism}");
    let _ = writeln!(out, "# outcome={}", u8::from(result.outcome));
    match result.first_failure_round {
        Some(r) => {
            let _ = writeln!(out, "# first_failure_round={r}");
        }
        None => {
            let _ = writeln!(out, "# first_failure_round=none");
        }
    }
    for (i, r) in transcript.rounds.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i}\t{}\t{}\t{}\t{}",
            hex::encode(r.digest),
            r.answer,
            result.true_answers[i],
            result.errors[i]
        );
    }
    out
}

/// One parsed round of a log.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub index: usize,
    pub digest: QueryDigest,
    pub answer: f64,
    pub true_answer: f64,
    pub error: f64,
}

/// Parses the rows of a log written by [`write_log`]; header lines are
/// returned as `(key, value)` pairs.
pub fn parse_log(text: &str) -> Result<(Vec<(String, String)>, Vec<LogRow>), String> {
    let mut header = Vec::new();
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.trim().split_once('=') {
                header.push((k.to_string(), v.to_string()));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [idx, digest, answer, truth, err] = fields.as_slice() else {
            return Err(format!("line {}: expected 5 fields", lineno + 1));
        };
        let bad = |what: &str| format!("line {}: bad {what}", lineno + 1);
        let mut d = [0u8; 32];
        hex::decode_to_slice(digest, &mut d).map_err(|_| bad("digest"))?;
        rows.push(LogRow {
            index: idx.parse().map_err(|_| bad("index"))?,
            digest: d,
            answer: answer.parse().map_err(|_| bad("answer"))?,
            true_answer: truth.parse().map_err(|_| bad("true answer"))?,
            error: err.parse().map_err(|_| bad("error"))?,
        });
    }
    Ok((header, rows))
}
