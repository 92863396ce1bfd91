#![allow(dead_code)]

use proptest::prelude::*;
use wlstream::{Label, LabeledGraph};

/// Raw parts of a small random graph: node labels and edges by node index.
#[derive(Debug, Clone)]
pub struct RawGraph {
    pub labels: Vec<String>,
    pub edges: Vec<(usize, usize)>,
}

impl RawGraph {
    pub fn build(&self, id: &str, day: u32, label: Label) -> LabeledGraph {
        self.build_with_ids(
            id,
            day,
            label,
            &(0..self.labels.len() as u64).collect::<Vec<_>>(),
        )
    }

    /// Uses `ids[i]` as the id of node `i`.
    pub fn build_with_ids(&self, id: &str, day: u32, label: Label, ids: &[u64]) -> LabeledGraph {
        let nodes = self
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| (ids[i], l.clone()))
            .collect();
        let edges = self.edges.iter().map(|&(a, b)| (ids[a], ids[b])).collect();
        LabeledGraph::new(id, day, label, None, nodes, edges).unwrap()
    }
}

pub fn raw_graph(
    max_nodes: usize,
    max_edges: usize,
    alphabet: usize,
) -> impl Strategy<Value = RawGraph> {
    (1..=max_nodes).prop_flat_map(move |n| {
        let labels = prop::collection::vec(
            (0..alphabet).prop_map(|k| ((b'a' + k as u8) as char).to_string()),
            n,
        );
        let edges = prop::collection::vec((0..n, 0..n), 0..=max_edges);
        (labels, edges).prop_map(|(labels, edges)| RawGraph { labels, edges })
    })
}

pub fn label() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::Benign), Just(Label::Malicious)]
}
