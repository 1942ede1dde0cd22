//! Ingestion of observed samples and reduction to sufficient statistics.
//!
//! Three on-disk formats are accepted (raw labels, label-count table,
//! fingerprint table); everything is normalized to [`SampleSummary`] at the
//! boundary so that the estimation modules never see species labels.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};

/// Sufficient statistics of an observed sample: the size n, the number of
/// distinct species K_n, and the fingerprint r -> M_{r,n}. Species labels
/// are deliberately absent; every functional in this crate is invariant
/// under relabelling.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSummary {
    n: u64,
    k: u64,
    fingerprint: BTreeMap<u64, u64>,
}

impl SampleSummary {
    /// Build from a sequence of opaque labels.
    pub fn from_labels<S: AsRef<str>>(tokens: &[S]) -> Result<SampleSummary> {
        if tokens.is_empty() {
            return Err(Error::Constraint("empty sample: at least one observation required".into()));
        }
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for t in tokens {
            *counts.entry(t.as_ref()).or_insert(0) += 1;
        }
        Self::from_frequencies_iter(counts.into_values())
    }

    /// Build from per-species frequencies.
    pub fn from_frequencies(frequencies: &[u64]) -> Result<SampleSummary> {
        if frequencies.is_empty() {
            return Err(Error::Constraint("empty sample: at least one species required".into()));
        }
        Self::from_frequencies_iter(frequencies.iter().copied())
    }

    fn from_frequencies_iter(frequencies: impl Iterator<Item = u64>) -> Result<SampleSummary> {
        let mut fingerprint = BTreeMap::new();
        for f in frequencies {
            if f == 0 {
                return Err(Error::Constraint("species frequencies must be positive".into()));
            }
            *fingerprint.entry(f).or_insert(0) += 1;
        }
        Self::from_fingerprint_map(fingerprint)
    }

    /// Build from (frequency, multiplicity) pairs.
    pub fn from_fingerprint(pairs: &[(u64, u64)]) -> Result<SampleSummary> {
        let mut fingerprint = BTreeMap::new();
        for &(r, m) in pairs {
            if r == 0 {
                return Err(Error::Constraint("fingerprint frequency r must be positive".into()));
            }
            if fingerprint.insert(r, m).is_some() {
                return Err(Error::Constraint(format!("duplicate fingerprint frequency r={r}")));
            }
        }
        fingerprint.retain(|_, &mut m| m > 0);
        Self::from_fingerprint_map(fingerprint)
    }

    fn from_fingerprint_map(fingerprint: BTreeMap<u64, u64>) -> Result<SampleSummary> {
        if fingerprint.is_empty() {
            return Err(Error::Constraint("fingerprint carries no species (all m_r are zero)".into()));
        }
        let n = fingerprint.iter().map(|(&r, &m)| r * m).sum();
        let k = fingerprint.values().sum();
        Ok(SampleSummary { n, k, fingerprint })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn fingerprint(&self) -> &BTreeMap<u64, u64> {
        &self.fingerprint
    }

    /// m_r, zero when no species has frequency r.
    pub fn count_with_frequency(&self, r: u64) -> u64 {
        self.fingerprint.get(&r).copied().unwrap_or(0)
    }

    pub fn max_frequency(&self) -> u64 {
        *self.fingerprint.keys().last().expect("nonempty by construction")
    }

    /// The frequency multiset, materialized in decreasing order (m_r copies
    /// of each r). Cost is O(k); intended for the simulation paths, not for
    /// astronomically large fingerprint inputs.
    pub fn frequencies(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.k as usize);
        for (&r, &m) in self.fingerprint.iter().rev() {
            for _ in 0..m {
                out.push(r);
            }
        }
        out
    }
}

fn split_csv_pair(line: &str, lineno: usize) -> Result<(&str, &str)> {
    let mut parts = line.split(',');
    let a = parts.next().unwrap_or("");
    let b = parts
        .next()
        .ok_or_else(|| Error::Parse { line: lineno, message: format!("expected two comma-separated fields, got {line:?}") })?;
    if parts.next().is_some() {
        return Err(Error::Parse { line: lineno, message: format!("expected two comma-separated fields, got {line:?}") });
    }
    Ok((a.trim(), b.trim()))
}

/// Parse one-token-per-line label text.
pub fn parse_labels(text: &str) -> Result<SampleSummary> {
    let tokens: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    if tokens.is_empty() {
        return Err(Error::Parse { line: 1, message: "no labels found in input".into() });
    }
    SampleSummary::from_labels(&tokens)
}

/// Parse `label,count` CSV text. A leading `label,count` header is allowed.
pub fn parse_label_counts(text: &str) -> Result<SampleSummary> {
    let mut frequencies = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if idx == 0 && line.eq_ignore_ascii_case("label,count") {
            continue;
        }
        let (label, count) = split_csv_pair(line, lineno)?;
        let count: u64 = count
            .parse()
            .map_err(|_| Error::Parse { line: lineno, message: format!("count must be a nonnegative integer, got {count:?}") })?;
        if count == 0 {
            return Err(Error::Parse { line: lineno, message: format!("count for label {label:?} must be positive") });
        }
        if let Some(first) = seen.insert(label.to_string(), lineno) {
            return Err(Error::Parse { line: lineno, message: format!("label {label:?} already appeared on line {first}") });
        }
        frequencies.push(count);
    }
    if frequencies.is_empty() {
        return Err(Error::Parse { line: 1, message: "no label counts found in input".into() });
    }
    SampleSummary::from_frequencies(&frequencies)
}

/// Parse `r,m_r` CSV text; an optional non-numeric header line is skipped.
pub fn parse_fingerprint(text: &str) -> Result<SampleSummary> {
    let mut pairs = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (r, m) = split_csv_pair(line, lineno)?;
        if idx == 0 && r.parse::<u64>().is_err() {
            continue; // header
        }
        let r: u64 = r
            .parse()
            .map_err(|_| Error::Parse { line: lineno, message: format!("frequency r must be a positive integer, got {r:?}") })?;
        let m: u64 = m
            .parse()
            .map_err(|_| Error::Parse { line: lineno, message: format!("multiplicity m_r must be a nonnegative integer, got {m:?}") })?;
        pairs.push((r, m));
    }
    if pairs.is_empty() {
        return Err(Error::Parse { line: 1, message: "no fingerprint rows found in input".into() });
    }
    SampleSummary::from_fingerprint(&pairs).map_err(|e| match e {
        Error::Constraint(msg) => Error::Parse { line: 1, message: msg },
        other => other,
    })
}
