//! Append-only feature vocabulary.

use std::io::{BufRead, Write};

use indexmap::IndexSet;
use thiserror::Error;

use crate::graph::{LABEL_SEPARATOR, NEIGHBOR_SEPARATOR};
use crate::sparse::SparseVector;

/// Bijection between feature strings and dense indices assigned in
/// first-insertion order. Entries are never removed or re-indexed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    features: IndexSet<String>,
}

#[derive(Debug, Error)]
pub enum VocabDumpError {
    #[error("line {line}: expected `<index>\\t<feature>`")]
    Malformed { line: usize },
    #[error("line {line}: index {found} out of sequence (expected {expected})")]
    OutOfSequence {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: bad escape sequence")]
    BadEscape { line: usize },
    #[error("line {line}: duplicate feature")]
    Duplicate { line: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, feature: &str) -> Option<usize> {
        self.features.get_index_of(feature)
    }

    pub fn feature(&self, index: usize) -> Option<&str> {
        self.features.get_index(index).map(String::as_str)
    }

    /// Returns the index of `feature`, appending it if unseen.
    pub fn insert(&mut self, feature: &str) -> usize {
        match self.features.get_index_of(feature) {
            Some(i) => i,
            None => self.features.insert_full(feature.to_string()).0,
        }
    }

    /// Appends every unseen feature in iteration order.
    pub fn extend<I, S>(&mut self, features: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for f in features {
            self.insert(f.as_ref());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &str)> {
        self.features.iter().map(String::as_str).enumerate()
    }

    /// Counts occurrences of known features; unknown ones are dropped.
    pub fn count_features<I, S>(&self, features: I) -> SparseVector
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let pairs = features
            .into_iter()
            .filter_map(|f| self.index_of(f.as_ref()))
            .map(|i| (i, 1.0));
        SparseVector::from_pairs(pairs, self.len())
    }

    /// Writes one `<index>\t<escaped feature>` line per entry.
    pub fn write_dump<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        for (i, f) in self.iter() {
            writeln!(sink, "{i}\t{}", escape_feature(f))?;
        }
        sink.flush()
    }

    pub fn read_dump<R: BufRead>(source: R) -> Result<Vocabulary, VocabDumpError> {
        let mut vocab = Vocabulary::new();
        for (n, line) in source.lines().enumerate() {
            let line_no = n + 1;
            let line = line?;
            let (index, escaped) = line
                .split_once('\t')
                .ok_or(VocabDumpError::Malformed { line: line_no })?;
            let index: usize = index
                .parse()
                .map_err(|_| VocabDumpError::Malformed { line: line_no })?;
            if index != vocab.len() {
                return Err(VocabDumpError::OutOfSequence {
                    line: line_no,
                    expected: vocab.len(),
                    found: index,
                });
            }
            let feature =
                unescape_feature(escaped).ok_or(VocabDumpError::BadEscape { line: line_no })?;
            if vocab.index_of(&feature).is_some() {
                return Err(VocabDumpError::Duplicate { line: line_no });
            }
            vocab.insert(&feature);
        }
        Ok(vocab)
    }
}

/// Escapes a feature so it fits on one dump line without raw separators.
///
/// | char   | escape |
/// |---------|--------|
/// | `\`     | `\\`   |
/// | tab     | `\t`   |
/// | newline | `\n`   |
/// | CR      | `\r`   |
/// | U+001F  | `\U`   |
/// | U+001E  | `\R`   |
pub fn escape_feature(feature: &str) -> String {
    let mut out = String::with_capacity(feature.len());
    for c in feature.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            LABEL_SEPARATOR => out.push_str("\\U"),
            NEIGHBOR_SEPARATOR => out.push_str("\\R"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_feature(escaped: &str) -> Option<String> {
    let mut out = String::with_capacity(escaped.len());
    let mut chars = escaped.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next()? {
            '\\' => '\\',
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            'U' => LABEL_SEPARATOR,
            'R' => NEIGHBOR_SEPARATOR,
            _ => return None,
        });
    }
    Some(out)
}
