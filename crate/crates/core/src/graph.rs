//! Node-labeled directed graphs and the line-delimited corpus format.
//!
//! A corpus file is UTF-8 text with one JSON object per line. The first line
//! may be a header `{"corpus":<name>,"day_count":<int>}`; every other line is
//! a graph record with the fixed field order
//! `id, day, label, family (optional), nodes, edges`.

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reserved separator placed between a node's previous label and its
/// neighbor labels during relabeling (ASCII unit separator).
pub const LABEL_SEPARATOR: char = '\u{1F}';
/// Reserved separator placed between sorted neighbor labels (ASCII record
/// separator).
pub const NEIGHBOR_SEPARATOR: char = '\u{1E}';

/// Identifier of a node within one graph.
pub type NodeId = u64;

/// Ground-truth class of a graph. Serialized as `-1` / `1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Benign,
    Malicious,
}

impl Label {
    /// `-1.0` for benign, `+1.0` for malicious.
    pub fn sign(self) -> f64 {
        match self {
            Label::Benign => -1.0,
            Label::Malicious => 1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Benign => -1,
            Label::Malicious => 1,
        }
    }

    pub fn from_i64(value: i64) -> Option<Label> {
        match value {
            -1 => Some(Label::Benign),
            1 => Some(Label::Malicious),
            _ => None,
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Benign => Label::Malicious,
            Label::Malicious => Label::Benign,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph {graph:?}: node id {node} appears more than once")]
    DuplicateNode { graph: String, node: NodeId },
    #[error("graph {graph:?}: edge ({src}, {dst}) refers to a missing node")]
    DanglingEdge {
        graph: String,
        src: NodeId,
        dst: NodeId,
    },
    #[error("graph {graph:?}: node {node} has an empty label")]
    EmptyLabel { graph: String, node: NodeId },
    #[error("graph {graph:?}: label of node {node} contains a reserved separator character")]
    ReservedCharacter { graph: String, node: NodeId },
    #[error("graph id must not be empty")]
    EmptyId,
}

/// A node-labeled directed graph with its stream metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGraph {
    id: String,
    day: u32,
    label: Label,
    family: Option<String>,
    nodes: Vec<(NodeId, String)>,
    edges: Vec<(NodeId, NodeId)>,
}

impl LabeledGraph {
    pub fn new(
        id: impl Into<String>,
        day: u32,
        label: Label,
        family: Option<String>,
        nodes: Vec<(NodeId, String)>,
        edges: Vec<(NodeId, NodeId)>,
    ) -> Result<Self, GraphError> {
        let id = id.into();
        if id.is_empty() {
            return Err(GraphError::EmptyId);
        }
        let mut seen = HashSet::with_capacity(nodes.len());
        for (node, text) in &nodes {
            if !seen.insert(*node) {
                return Err(GraphError::DuplicateNode {
                    graph: id,
                    node: *node,
                });
            }
            if text.is_empty() {
                return Err(GraphError::EmptyLabel {
                    graph: id,
                    node: *node,
                });
            }
            if text.contains([LABEL_SEPARATOR, NEIGHBOR_SEPARATOR]) {
                return Err(GraphError::ReservedCharacter {
                    graph: id,
                    node: *node,
                });
            }
        }
        if let Some(&(src, dst)) = edges
            .iter()
            .find(|(s, d)| !seen.contains(s) || !seen.contains(d))
        {
            return Err(GraphError::DanglingEdge {
                graph: id,
                src,
                dst,
            });
        }
        Ok(LabeledGraph {
            id,
            day,
            label,
            family,
            nodes,
            edges,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn day(&self) -> u32 {
        self.day
    }

    pub fn label(&self) -> Label {
        self.label
    }

    /// Family tag; only the variant-delay analysis looks at it.
    pub fn family(&self) -> Option<&str> {
        self.family.as_deref()
    }

    pub fn nodes(&self) -> &[(NodeId, String)] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Out-neighbor positions for every node, deduplicated and sorted.
    /// Positions index into [`nodes`](Self::nodes).
    pub fn out_neighbors(&self) -> Vec<Vec<usize>> {
        let position: std::collections::HashMap<NodeId, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, (id, _))| (*id, i))
            .collect();
        let mut adjacency = vec![Vec::new(); self.nodes.len()];
        for (src, dst) in &self.edges {
            adjacency[position[src]].push(position[dst]);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        adjacency
    }

    /// Copy of this graph placed on `day`.
    pub fn with_day(&self, day: u32) -> LabeledGraph {
        LabeledGraph {
            day,
            ..self.clone()
        }
    }
}

fn at_line(line: &Option<usize>) -> String {
    match line {
        Some(n) => format!(" (line {n})"),
        None => String::new(),
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: label {value} is not -1 or 1")]
    LabelDomain { line: usize, value: i64 },
    #[error("{source}{}", at_line(.line))]
    InvalidGraph {
        line: Option<usize>,
        #[source]
        source: GraphError,
    },
    #[error("duplicate graph id {id:?}{}", at_line(.line))]
    DuplicateId { line: Option<usize>, id: String },
    #[error("day_count {day_count} does not cover day {max_day}")]
    DayCountTooSmall { day_count: u32, max_day: u32 },
    #[error("line {line}: corpus header is only allowed on the first line")]
    MisplacedHeader { line: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A named collection of graphs in stream (file) order.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    name: String,
    day_count: u32,
    graphs: Vec<LabeledGraph>,
}

impl Corpus {
    /// Builds a corpus, checking id uniqueness and that `day_count` covers
    /// every graph's day.
    pub fn new(
        name: impl Into<String>,
        day_count: u32,
        graphs: Vec<LabeledGraph>,
    ) -> Result<Self, CorpusError> {
        let mut ids = HashSet::with_capacity(graphs.len());
        for g in &graphs {
            if !ids.insert(g.id()) {
                return Err(CorpusError::DuplicateId {
                    line: None,
                    id: g.id().to_string(),
                });
            }
        }
        if let Some(max_day) = graphs.iter().map(LabeledGraph::day).max() {
            if day_count <= max_day {
                return Err(CorpusError::DayCountTooSmall { day_count, max_day });
            }
        }
        Ok(Corpus {
            name: name.into(),
            day_count,
            graphs,
        })
    }

    /// Builds a corpus whose `day_count` is the smallest value covering all
    /// graphs.
    pub fn from_graphs(
        name: impl Into<String>,
        graphs: Vec<LabeledGraph>,
    ) -> Result<Self, CorpusError> {
        let day_count = graphs.iter().map(|g| g.day() + 1).max().unwrap_or(0);
        Corpus::new(name, day_count, graphs)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn day_count(&self) -> u32 {
        self.day_count
    }

    pub fn graphs(&self) -> &[LabeledGraph] {
        &self.graphs
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn into_graphs(self) -> Vec<LabeledGraph> {
        self.graphs
    }

    /// Latest day of any graph, if the corpus is non-empty.
    pub fn latest_day(&self) -> Option<u32> {
        self.graphs.iter().map(LabeledGraph::day).max()
    }

    /// Orders graphs by `(day, id)`. Stable and idempotent.
    pub fn sort_by_day(&self) -> Corpus {
        let mut graphs = self.graphs.clone();
        graphs.sort_by(|a, b| (a.day, &a.id).cmp(&(b.day, &b.id)));
        Corpus {
            name: self.name.clone(),
            day_count: self.day_count,
            graphs,
        }
    }

    pub fn is_sorted_by_day(&self) -> bool {
        self.graphs
            .windows(2)
            .all(|w| (w[0].day, &w[0].id) <= (w[1].day, &w[1].id))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeaderRecord {
    corpus: String,
    day_count: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRecord {
    id: String,
    day: u32,
    label: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    family: Option<String>,
    nodes: Vec<(NodeId, String)>,
    edges: Vec<(NodeId, NodeId)>,
}

/// Reads a corpus from line-delimited records. Blank lines are ignored.
///
/// Without a header line the corpus is unnamed and `day_count` is derived
/// from the graphs.
pub fn parse_corpus<R: BufRead>(source: R) -> Result<Corpus, CorpusError> {
    let mut header: Option<HeaderRecord> = None;
    let mut graphs = Vec::new();
    let mut ids = HashSet::new();
    let mut first_record = true;

    for (index, line) in source.lines().enumerate() {
        let line_no = index + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        let is_header = value.get("corpus").is_some();
        if is_header {
            if !first_record {
                return Err(CorpusError::MisplacedHeader { line: line_no });
            }
            first_record = false;
            header = Some(
                serde_json::from_value(value).map_err(|e| CorpusError::Malformed {
                    line: line_no,
                    message: e.to_string(),
                })?,
            );
            continue;
        }
        first_record = false;

        let record: GraphRecord =
            serde_json::from_value(value).map_err(|e| CorpusError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        let label = Label::from_i64(record.label).ok_or(CorpusError::LabelDomain {
            line: line_no,
            value: record.label,
        })?;
        if !ids.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId {
                line: Some(line_no),
                id: record.id,
            });
        }
        let graph = LabeledGraph::new(
            record.id,
            record.day,
            label,
            record.family,
            record.nodes,
            record.edges,
        )
        .map_err(|source| CorpusError::InvalidGraph {
            line: Some(line_no),
            source,
        })?;
        graphs.push(graph);
    }

    match header {
        Some(h) => Corpus::new(h.corpus, h.day_count, graphs),
        None => Corpus::from_graphs("", graphs),
    }
}

/// Writes the header line followed by one record per graph. Output is a
/// pure function of the corpus.
pub fn write_corpus<W: Write>(corpus: &Corpus, mut sink: W) -> Result<(), CorpusError> {
    let header = HeaderRecord {
        corpus: corpus.name.clone(),
        day_count: corpus.day_count,
    };
    serde_json::to_writer(&mut sink, &header).map_err(std::io::Error::from)?;
    sink.write_all(b"\n")?;
    for g in &corpus.graphs {
        let record = GraphRecord {
            id: g.id.clone(),
            day: g.day,
            label: i64::from(g.label.as_i8()),
            family: g.family.clone(),
            nodes: g.nodes.clone(),
            edges: g.edges.clone(),
        };
        serde_json::to_writer(&mut sink, &record).map_err(std::io::Error::from)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

/// Serializes a corpus into a byte buffer.
pub fn corpus_to_bytes(corpus: &Corpus) -> Vec<u8> {
    let mut buf = Vec::new();
    write_corpus(corpus, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_str(s: &str) -> Result<Corpus, CorpusError> {
        parse_corpus(s.as_bytes())
    }

    fn node(id: NodeId, label: &str) -> (NodeId, String) {
        (id, label.to_string())
    }

    #[test]
    fn minimal_record() {
        let c = parse_str(r#"{"id":"g1","day":0,"label":1,"nodes":[[0,"sendSMS"]],"edges":[]}"#)
            .unwrap();
        assert_eq!(c.len(), 1);
        let g = &c.graphs()[0];
        assert_eq!(g.node_count(), 1);
        assert!(g.edges().is_empty());
        assert_eq!(g.label(), Label::Malicious);
        assert_eq!(c.day_count(), 1);
    }

    #[test]
    fn dangling_edge_is_rejected() {
        let err = parse_str(r#"{"id":"g1","day":0,"label":1,"nodes":[[0,"a"]],"edges":[[0,7]]}"#)
            .unwrap_err();
        assert!(matches!(
            err,
            CorpusError::InvalidGraph {
                line: Some(1),
                source: GraphError::DanglingEdge { dst: 7, .. }
            }
        ));
    }

    #[test]
    fn label_zero_is_rejected() {
        let err = parse_str(r#"{"id":"g1","day":0,"label":0,"nodes":[],"edges":[]}"#).unwrap_err();
        assert!(matches!(
            err,
            CorpusError::LabelDomain { line: 1, value: 0 }
        ));
    }

    #[test]
    fn duplicate_id_reports_line() {
        let text = "{\"id\":\"a\",\"day\":0,\"label\":1,\"nodes\":[],\"edges\":[]}\n\
                    \n\
                    {\"id\":\"a\",\"day\":1,\"label\":-1,\"nodes\":[],\"edges\":[]}\n";
        let err = parse_str(text).unwrap_err();
        assert!(matches!(
            err,
            CorpusError::DuplicateId { line: Some(3), .. }
        ));
        assert!(err.to_string().contains("line 3"));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "{\"corpus\":\"x\",\"day_count\":2}\n{\"id\":\"a\",\"day\":0";
        match parse_str(text).unwrap_err() {
            CorpusError::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reserved_characters_and_empty_labels() {
        let g = LabeledGraph::new(
            "g",
            0,
            Label::Benign,
            None,
            vec![node(0, "a\u{1F}b")],
            vec![],
        );
        assert!(matches!(g, Err(GraphError::ReservedCharacter { .. })));
        let g = LabeledGraph::new("g", 0, Label::Benign, None, vec![node(0, "")], vec![]);
        assert!(matches!(g, Err(GraphError::EmptyLabel { .. })));
        let g = LabeledGraph::new(
            "g",
            0,
            Label::Benign,
            None,
            vec![node(0, "a"), node(0, "b")],
            vec![],
        );
        assert!(matches!(g, Err(GraphError::DuplicateNode { node: 0, .. })));
    }

    #[test]
    fn header_must_come_first_and_cover_days() {
        let text = "{\"id\":\"a\",\"day\":0,\"label\":1,\"nodes\":[],\"edges\":[]}\n\
                    {\"corpus\":\"x\",\"day_count\":2}\n";
        assert!(matches!(
            parse_str(text).unwrap_err(),
            CorpusError::MisplacedHeader { line: 2 }
        ));
        let text = "{\"corpus\":\"x\",\"day_count\":1}\n\
                    {\"id\":\"a\",\"day\":3,\"label\":1,\"nodes\":[],\"edges\":[]}\n";
        assert!(matches!(
            parse_str(text).unwrap_err(),
            CorpusError::DayCountTooSmall {
                day_count: 1,
                max_day: 3
            }
        ));
    }

    #[test]
    fn empty_corpus_is_header_only() {
        let c = Corpus::new("empty", 0, vec![]).unwrap();
        let bytes = corpus_to_bytes(&c);
        assert_eq!(
            String::from_utf8(bytes.clone()).unwrap(),
            "{\"corpus\":\"empty\",\"day_count\":0}\n"
        );
        assert_eq!(parse_corpus(&bytes[..]).unwrap(), c);
    }

    #[test]
    fn single_graph_round_trip_and_field_order() {
        let g = LabeledGraph::new(
            "g1",
            4,
            Label::Malicious,
            Some("fam".into()),
            vec![node(0, "read"), node(3, "send")],
            vec![(0, 3), (3, 3)],
        )
        .unwrap();
        let c = Corpus::new("one", 5, vec![g]).unwrap();
        let bytes = corpus_to_bytes(&c);
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            r#"{"id":"g1","day":4,"label":1,"family":"fam","nodes":[[0,"read"],[3,"send"]],"edges":[[0,3],[3,3]]}"#
        );
        assert!(text.lines().all(|l| !l.ends_with(' ')));
        assert_eq!(parse_corpus(&bytes[..]).unwrap(), c);
    }

    #[test]
    fn sort_by_day_orders_and_breaks_ties_by_id() {
        let mk = |id: &str, day| {
            LabeledGraph::new(id, day, Label::Benign, None, vec![], vec![]).unwrap()
        };
        let c =
            Corpus::from_graphs("s", vec![mk("x", 2), mk("b", 0), mk("a", 0), mk("y", 1)]).unwrap();
        let sorted = c.sort_by_day();
        let ids: Vec<_> = sorted.graphs().iter().map(|g| g.id()).collect();
        assert_eq!(ids, ["a", "b", "y", "x"]);
        assert_eq!(sorted.sort_by_day(), sorted);
        assert!(sorted.is_sorted_by_day());
        assert!(!c.is_sorted_by_day());
    }

    #[test]
    fn out_neighbors_are_deduplicated() {
        let g = LabeledGraph::new(
            "g",
            0,
            Label::Benign,
            None,
            vec![node(10, "a"), node(20, "b")],
            vec![(10, 20), (10, 20), (20, 20)],
        )
        .unwrap();
        assert_eq!(g.out_neighbors(), vec![vec![1], vec![1]]);
    }
}
