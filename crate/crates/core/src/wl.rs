//! Weisfeiler-Lehman subtree features with an explicit, growing vocabulary.
//!
//! Iteration 0 keeps each node's own label. Iteration `i > 0` appends to a
//! node's previous label the sorted multiset of its out-neighbors' previous
//! labels:
//!
//! ```text
//! label_i(n) = label_{i-1}(n) + U+001F + join(sort(neighbor labels), U+001E)
//! ```
//!
//! The separators cannot occur in node labels, which keeps the encoding
//! injective. Labels are kept as full strings; vocabulary indices serve as
//! the compressed form.

use crate::graph::{LabeledGraph, LABEL_SEPARATOR, NEIGHBOR_SEPARATOR};
use crate::sparse::SparseVector;
use crate::vocab::Vocabulary;

/// Neighborhood depth `h`; `h + 1` labels are produced per node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WlConfig {
    pub depth: u32,
}

impl WlConfig {
    pub fn new(depth: u32) -> Self {
        WlConfig { depth }
    }
}

impl Default for WlConfig {
    fn default() -> Self {
        WlConfig { depth: 2 }
    }
}

/// Builds the enriched label from a node's previous label and its
/// neighbors' previous labels (sorted here).
pub fn enrich(previous: &str, mut neighbor_labels: Vec<&str>) -> String {
    neighbor_labels.sort_unstable();
    let payload: usize = neighbor_labels.iter().map(|s| s.len() + 1).sum();
    let mut out = String::with_capacity(previous.len() + 1 + payload);
    out.push_str(previous);
    out.push(LABEL_SEPARATOR);
    for (k, label) in neighbor_labels.iter().enumerate() {
        if k > 0 {
            out.push(NEIGHBOR_SEPARATOR);
        }
        out.push_str(label);
    }
    out
}

/// All enriched labels of `graph`, iteration-major then node order:
/// `[label_0(n_1), .., label_0(n_k), label_1(n_1), ..]`. Length is
/// `|N| * (h + 1)`.
pub fn relabel(graph: &LabeledGraph, config: WlConfig) -> Vec<String> {
    let n = graph.node_count();
    let mut out = Vec::with_capacity(n * (config.depth as usize + 1));
    if n == 0 {
        return out;
    }
    let adjacency = graph.out_neighbors();
    let mut current: Vec<String> = graph.nodes().iter().map(|(_, l)| l.clone()).collect();
    out.extend(current.iter().cloned());
    for _ in 0..config.depth {
        let next: Vec<String> = adjacency
            .iter()
            .enumerate()
            .map(|(node, nbrs)| {
                enrich(
                    &current[node],
                    nbrs.iter().map(|&m| current[m].as_str()).collect(),
                )
            })
            .collect();
        out.extend(next.iter().cloned());
        current = next;
    }
    out
}

/// Extends `vocab` with every enriched label of `graphs`, in graph order and
/// then in the order produced by [`relabel`]. Existing indices are kept.
pub fn extract_vocab<'a, I>(graphs: I, config: WlConfig, vocab: &mut Vocabulary)
where
    I: IntoIterator<Item = &'a LabeledGraph>,
{
    for g in graphs {
        vocab.extend(relabel(g, config));
    }
}

/// Bag-of-features count vector of `graph` over a fixed vocabulary. Labels
/// absent from the vocabulary are dropped.
pub fn vectorize(graph: &LabeledGraph, config: WlConfig, vocab: &Vocabulary) -> SparseVector {
    vocab.count_features(relabel(graph, config))
}

/// WL subtree kernel value: the dot product of both graphs' count vectors
/// over the vocabulary of the pair.
pub fn wl_kernel(g1: &LabeledGraph, g2: &LabeledGraph, config: WlConfig) -> f64 {
    let mut vocab = Vocabulary::new();
    extract_vocab([g1, g2], config, &mut vocab);
    vectorize(g1, config, &vocab).dot(&vectorize(g2, config, &vocab))
}
