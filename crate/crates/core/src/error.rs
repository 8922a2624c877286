use crate::graph::NodeId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("node {node} out of range for a graph on {p} nodes")]
    NodeOutOfRange { node: NodeId, p: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("more than one edge between nodes {0} and {1}")]
    DuplicateEdge(NodeId, NodeId),
    #[error("edge set contains a directed cycle")]
    Cyclic,
    #[error("graph has {p} nodes, configured limit is {limit}")]
    TooManyNodes { p: usize, limit: usize },
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("edge {0}-{1} of the partially directed graph disagrees with the supplied DAG")]
    PatternMismatch(NodeId, NodeId),
    #[error("equivalence class has more than {cap} members")]
    CapExceeded { cap: usize },
    #[error("sparsity q = {q} outside 1..={max} for p = {p}")]
    InvalidSparsity { q: usize, p: usize, max: usize },
    #[error("exact enumeration is limited to p <= {limit}, got p = {p}")]
    SizeLimit { p: usize, limit: usize },
    #[error("no undirected edges left to orient")]
    NoUndirectedEdges,
    #[error("no graph with the requested equivalence class size after {0} attempts")]
    RetryExhausted(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}
