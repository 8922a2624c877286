//! Edge-list and batch files.
//!
//! Edge lists hold one `SRC DST [WEIGHT]` line per edge, tab or space
//! separated. Lines with weight 0 are skipped, blank lines and `#` comments
//! ignored. When every node name is a nonnegative integer the names are used
//! as ids; otherwise ids follow first appearance. A `# nodes N` comment sets
//! the node count so trailing isolated nodes survive a round trip.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use multiperturb_core::{Batch, Dag, Intervention};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("edge list contains a directed cycle")]
    Cyclic,
    #[error(transparent)]
    Graph(#[from] multiperturb_core::Error),
}

/// A graph read from a file with the original node names.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedDag {
    pub dag: Dag,
    pub names: Vec<String>,
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Io { path: path.display().to_string(), source })
}

pub fn load_edge_list(path: &Path) -> Result<NamedDag, IoError> {
    parse_edge_list(&read(path)?)
}

pub fn parse_edge_list(text: &str) -> Result<NamedDag, IoError> {
    let mut declared = None;
    let mut pairs: Vec<(usize, &str, &str)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.trim();
        if let Some(comment) = body.strip_prefix('#') {
            let mut words = comment.split_whitespace();
            if words.next() == Some("nodes") {
                let n = words.next().and_then(|w| w.parse::<usize>().ok());
                declared = Some(n.ok_or_else(|| IoError::Parse { line, message: "bad node count".into() })?);
            }
            continue;
        }
        if body.is_empty() {
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if !(2..=3).contains(&fields.len()) {
            return Err(IoError::Parse { line, message: format!("expected `SRC DST [WEIGHT]`, got {} fields", fields.len()) });
        }
        if let Some(w) = fields.get(2) {
            let w: f64 = w.parse().map_err(|_| IoError::Parse { line, message: format!("bad weight `{w}`") })?;
            if w == 0.0 {
                continue;
            }
        }
        if fields[0] == fields[1] {
            return Err(IoError::Parse { line, message: format!("self-loop on `{}`", fields[0]) });
        }
        pairs.push((line, fields[0], fields[1]));
    }
    let numeric = pairs.iter().all(|(_, a, b)| a.parse::<usize>().is_ok() && b.parse::<usize>().is_ok());
    let mut names: Vec<String> = Vec::new();
    let mut edges = Vec::with_capacity(pairs.len());
    if numeric {
        let top = pairs.iter().map(|(_, a, b)| a.parse::<usize>().unwrap().max(b.parse().unwrap()) + 1).max().unwrap_or(0);
        let p = top.max(declared.unwrap_or(0));
        names = (0..p).map(|v| v.to_string()).collect();
        for (_, a, b) in &pairs {
            edges.push((a.parse().unwrap(), b.parse().unwrap()));
        }
    } else {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        for &(_, a, b) in &pairs {
            let mut ends = [0; 2];
            for (end, name) in ends.iter_mut().zip([a, b]) {
                let next = ids.len();
                *end = *ids.entry(name).or_insert_with(|| {
                    names.push(name.to_string());
                    next
                });
            }
            edges.push((ends[0], ends[1]));
        }
    }
    let mut seen = std::collections::HashSet::new();
    for (k, &(i, j)) in edges.iter().enumerate() {
        if seen.contains(&(j, i)) {
            return Err(IoError::Cyclic);
        }
        if !seen.insert((i, j)) {
            let (line, a, b) = pairs[k];
            return Err(IoError::Parse { line, message: format!("repeated edge `{a}` `{b}`") });
        }
    }
    let p = names.len();
    if p == 0 {
        return Err(IoError::Graph(multiperturb_core::Error::EmptyGraph));
    }
    match Dag::with_limit(p, edges, p.max(multiperturb_core::graph::DEFAULT_NODE_LIMIT)) {
        Ok(dag) => Ok(NamedDag { dag, names }),
        Err(multiperturb_core::Error::Cyclic) => Err(IoError::Cyclic),
        Err(e) => Err(e.into()),
    }
}

/// Sorted `SRC<TAB>DST` lines with numeric ids.
pub fn format_edge_list(dag: &Dag) -> String {
    let mut out = String::new();
    let top = dag.edges().iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
    if top < dag.p() {
        writeln!(out, "# nodes {}", dag.p()).unwrap();
    }
    for &(a, b) in dag.edges() {
        writeln!(out, "{a}\t{b}").unwrap();
    }
    out
}

pub fn save_edge_list(dag: &Dag, path: &Path) -> Result<(), IoError> {
    write(path, &format_edge_list(dag))
}

/// One intervention per line, sorted node ids separated by spaces.
pub fn format_batch(batch: &Batch) -> String {
    let mut out = String::new();
    for i in batch {
        let ids: Vec<String> = i.targets().iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", ids.join(" ")).unwrap();
    }
    out
}

pub fn save_batch(batch: &Batch, path: &Path) -> Result<(), IoError> {
    write(path, &format_batch(batch))
}

pub fn parse_batch(text: &str, p: usize) -> Result<Batch, IoError> {
    let mut batch = Batch::new();
    for (k, raw) in text.lines().enumerate() {
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut targets = Vec::new();
        for w in body.split_whitespace() {
            let v: usize = w.parse().map_err(|_| IoError::Parse { line: k + 1, message: format!("bad node id `{w}`") })?;
            if v >= p {
                return Err(IoError::Parse { line: k + 1, message: format!("node {v} out of range for {p} nodes") });
            }
            targets.push(v);
        }
        batch.insert(Intervention::new(targets));
    }
    Ok(batch)
}

pub fn load_batch(path: &Path, p: usize) -> Result<Batch, IoError> {
    parse_batch(&read(path)?, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dream_format() {
        let g = parse_edge_list("G1\tG2\t1\nG1\tG3\t1\nG2\tG3\t0\n").unwrap();
        assert_eq!(g.dag.p(), 3);
        assert_eq!(g.dag.edges(), &[(0, 1), (0, 2)]);
        assert_eq!(g.names, ["G1", "G2", "G3"]);
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_edge_list("a b\nb a\n"), Err(IoError::Cyclic)));
        assert!(matches!(parse_edge_list("a b\nb c\nc a\n"), Err(IoError::Cyclic)));
        match parse_edge_list("a b\n\na\n") {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_edge_list("a b x\n"), Err(IoError::Parse { line: 1, .. })));
        assert!(matches!(parse_edge_list("a a\n"), Err(IoError::Parse { line: 1, .. })));
        assert!(matches!(parse_edge_list("a b\na b\n"), Err(IoError::Parse { line: 2, .. })));
        assert!(parse_edge_list("").is_err());
    }

    #[test]
    fn tree_lines_are_sorted() {
        let g = Dag::new(5, [(1, 4), (0, 2), (1, 3), (0, 1)]).unwrap();
        assert_eq!(format_edge_list(&g), "0\t1\n0\t2\n1\t3\n1\t4\n");
    }

    #[test]
    fn isolated_nodes_survive() {
        let g = Dag::new(6, [(0, 1)]).unwrap();
        assert_eq!(parse_edge_list(&format_edge_list(&g)).unwrap().dag, g);
    }

    #[test]
    fn batches() {
        assert_eq!(format_batch(&Batch::new()), "");
        let b: Batch = [Intervention::new([2, 1])].into_iter().collect();
        assert_eq!(format_batch(&b), "1 2\n");
        assert_eq!(parse_batch("1 2\n\n0\n", 3).unwrap(), [Intervention::new([1, 2]), Intervention::single(0)].into_iter().collect());
        assert!(parse_batch("7\n", 3).is_err());
    }
}
