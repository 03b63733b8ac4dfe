//! Graph data model and TU-format dataset ingestion.
//!
//! The TU interchange format is plain text with 1-based indices:
//! `{name}_A.txt` holds one directed edge `i, j` per line (both directions of
//! every undirected edge appear), `{name}_graph_indicator.txt` maps node line
//! number to graph id, `{name}_graph_labels.txt` holds one class label per
//! graph, and the optional `{name}_node_labels.txt` holds one integer label
//! per node. Everything is converted to 0-based indices on load.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mat::Mat;

/// One sample graph: undirected, self-loop-free, with discrete vertex labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    vertex_count: usize,
    /// Canonical edge set: each undirected edge stored once as (min, max).
    edges: BTreeSet<(u32, u32)>,
    /// Adjacency lists, each sorted ascending; derived from `edges`.
    adjacency: Vec<Vec<u32>>,
    /// Raw discrete label per vertex (not an alphabet index).
    vertex_labels: Vec<i64>,
    /// Class id, 0-based and contiguous within a dataset.
    graph_label: usize,
}

impl Graph {
    /// Validates the structural invariants and builds adjacency lists.
    ///
    /// Edges may be given in any order and either vertex order; duplicates of
    /// the same undirected edge are rejected.
    pub fn new(
        vertex_count: usize,
        edges: &[(u32, u32)],
        vertex_labels: Vec<i64>,
        graph_label: usize,
    ) -> Result<Self> {
        if vertex_labels.len() != vertex_count {
            return Err(Error::MalformedDataset(format!(
                "vertex label count {} does not match vertex count {}",
                vertex_labels.len(),
                vertex_count
            )));
        }
        let mut canonical = BTreeSet::new();
        for &(u, v) in edges {
            if u == v {
                return Err(Error::MalformedDataset(format!("self-loop at vertex {u}")));
            }
            if u as usize >= vertex_count || v as usize >= vertex_count {
                return Err(Error::MalformedDataset(format!(
                    "edge ({u}, {v}) references a vertex outside 0..{vertex_count}"
                )));
            }
            if !canonical.insert((u.min(v), u.max(v))) {
                return Err(Error::MalformedDataset(format!("duplicate edge ({u}, {v})")));
            }
        }
        let mut adjacency = vec![Vec::new(); vertex_count];
        for &(u, v) in &canonical {
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph { vertex_count, edges: canonical, adjacency, vertex_labels, graph_label })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Undirected edges as (min, max) pairs in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adjacency[v]
    }

    pub fn vertex_labels(&self) -> &[i64] {
        &self.vertex_labels
    }

    pub fn graph_label(&self) -> usize {
        self.graph_label
    }

    /// Number of edges incident to `v`.
    ///
    /// # Examples
    /// ```
    /// let triangle = avcn::graph::Graph::new(3, &[(0, 1), (1, 2), (0, 2)], vec![0, 0, 0], 0).unwrap();
    /// assert_eq!(triangle.degree(1).unwrap(), 2);
    /// ```
    pub fn degree(&self, v: usize) -> Result<usize> {
        if v >= self.vertex_count {
            return Err(Error::IndexError { index: v, bound: self.vertex_count });
        }
        Ok(self.adjacency[v].len())
    }
}

/// A named collection of graphs sharing one label alphabet and class range.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graphs: Vec<Graph>,
    pub num_classes: usize,
    /// Sorted ascending; covers every vertex label present in `graphs`.
    pub label_alphabet: Vec<i64>,
}

impl Dataset {
    pub fn from_graphs(name: &str, graphs: Vec<Graph>) -> Result<Self> {
        if graphs.is_empty() {
            return Err(Error::EmptyInput("dataset has no graphs".into()));
        }
        let mut alphabet = BTreeSet::new();
        let mut max_class = 0usize;
        for g in &graphs {
            alphabet.extend(g.vertex_labels().iter().copied());
            max_class = max_class.max(g.graph_label());
        }
        Ok(Dataset {
            name: name.to_string(),
            graphs,
            num_classes: max_class + 1,
            label_alphabet: alphabet.into_iter().collect(),
        })
    }

    /// Per-graph class labels in graph order.
    pub fn class_labels(&self) -> Vec<usize> {
        self.graphs.iter().map(Graph::graph_label).collect()
    }
}

/// Loads a TU-format dataset from `directory/{name}_*.txt`.
///
/// File indices are 1-based and converted to 0-based. The `_A.txt` file lists
/// both directions of each undirected edge; the pair collapses to a single
/// edge. When `{name}_node_labels.txt` is absent, each vertex's degree is
/// substituted as its label. Graph class labels are remapped to a contiguous
/// 0-based range in ascending order of the raw values.
pub fn load_tu_dataset(directory: &Path, name: &str) -> Result<Dataset> {
    let file = |suffix: &str| -> PathBuf { directory.join(format!("{name}_{suffix}.txt")) };
    let indicator = read_int_lines(&require(file("graph_indicator"))?)?;
    let graph_labels_raw = read_int_lines(&require(file("graph_labels"))?)?;
    let edge_lines = read_edge_lines(&require(file("A"))?)?;
    let node_labels_path = file("node_labels");
    let node_labels_raw = if node_labels_path.exists() {
        let labels = read_int_lines(&node_labels_path)?;
        if labels.len() != indicator.len() {
            return Err(Error::MalformedDataset(format!(
                "{} node-label lines but {} graph-indicator lines",
                labels.len(),
                indicator.len()
            )));
        }
        Some(labels)
    } else {
        None
    };

    let num_graphs = graph_labels_raw.len();
    if num_graphs == 0 {
        return Err(Error::MalformedDataset("graph label file is empty".into()));
    }

    // Map each global node (1-based file index) to its graph and local index.
    let mut local_index = Vec::with_capacity(indicator.len());
    let mut vertex_counts = vec![0usize; num_graphs];
    for (line, &gid) in indicator.iter().enumerate() {
        if gid < 1 || gid as usize > num_graphs {
            return Err(Error::MalformedDataset(format!(
                "graph indicator line {}: graph id {} outside 1..={}",
                line + 1,
                gid,
                num_graphs
            )));
        }
        let g = gid as usize - 1;
        local_index.push((g, vertex_counts[g]));
        vertex_counts[g] += 1;
    }
    if let Some(g) = vertex_counts.iter().position(|&c| c == 0) {
        return Err(Error::MalformedDataset(format!("graph {} has no vertices", g + 1)));
    }

    let mut edges_per_graph: Vec<Vec<(u32, u32)>> = vec![Vec::new(); num_graphs];
    let mut seen = BTreeSet::new();
    for (line, &(a, b)) in edge_lines.iter().enumerate() {
        let check = |id: i64| -> Result<usize> {
            if id < 1 || id as usize > local_index.len() {
                return Err(Error::MalformedDataset(format!(
                    "edge line {}: node id {} outside 1..={}",
                    line + 1,
                    id,
                    local_index.len()
                )));
            }
            Ok(id as usize - 1)
        };
        let (ga, la) = local_index[check(a)?];
        let (gb, lb) = local_index[check(b)?];
        if ga != gb {
            return Err(Error::MalformedDataset(format!(
                "edge line {}: nodes {} and {} belong to different graphs",
                line + 1,
                a,
                b
            )));
        }
        if la == lb {
            return Err(Error::MalformedDataset(format!("edge line {}: self-loop at node {}", line + 1, a)));
        }
        // Both directions appear in the file; keep the first sighting only.
        let key = (ga, la.min(lb) as u32, la.max(lb) as u32);
        if seen.insert(key) {
            edges_per_graph[ga].push((la as u32, lb as u32));
        }
    }

    // Class labels remap to 0-based contiguous ids, ascending raw order.
    let distinct_classes: Vec<i64> = graph_labels_raw.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let class_of = |raw: i64| distinct_classes.binary_search(&raw).expect("raw class present");

    let mut graphs = Vec::with_capacity(num_graphs);
    for g in 0..num_graphs {
        let labels: Vec<i64> = match &node_labels_raw {
            Some(raw) => indicator
                .iter()
                .zip(raw)
                .filter(|(&gid, _)| gid as usize - 1 == g)
                .map(|(_, &l)| l)
                .collect(),
            None => Vec::new(),
        };
        let mut graph = Graph::new(
            vertex_counts[g],
            &edges_per_graph[g],
            if node_labels_raw.is_some() { labels } else { vec![0; vertex_counts[g]] },
            class_of(graph_labels_raw[g]),
        )?;
        if node_labels_raw.is_none() {
            // Without node labels, the vertex degree stands in for the label.
            let degrees: Vec<i64> = (0..graph.vertex_count()).map(|v| graph.adjacency[v].len() as i64).collect();
            graph.vertex_labels = degrees;
        }
        graphs.push(graph);
    }
    Dataset::from_graphs(name, graphs)
}

fn require(path: PathBuf) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingFile(path))
    }
}

/// Reads one integer per line, ignoring blank lines.
fn read_int_lines(path: &Path) -> Result<Vec<i64>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v = t
            .parse::<i64>()
            .map_err(|_| Error::MalformedDataset(format!("{}:{}: expected integer, got {t:?}", path.display(), n + 1)))?;
        out.push(v);
    }
    Ok(out)
}

/// Reads `i, j` pairs, one per line, ignoring blank lines.
fn read_edge_lines(path: &Path) -> Result<Vec<(i64, i64)>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let mut parts = t.split(',');
        let bad = || Error::MalformedDataset(format!("{}:{}: expected \"i, j\", got {t:?}", path.display(), n + 1));
        let a = parts.next().ok_or_else(bad)?.trim().parse::<i64>().map_err(|_| bad())?;
        let b = parts.next().ok_or_else(bad)?.trim().parse::<i64>().map_err(|_| bad())?;
        if parts.next().is_some() {
            return Err(bad());
        }
        out.push((a, b));
    }
    Ok(out)
}

/// One-hot vertex feature matrix: entry (i, j) = 1 iff vertex i's label is
/// `alphabet[j]`. Row count is the vertex count, column count `|alphabet|`.
///
/// # Examples
/// ```
/// use avcn::graph::{one_hot_features, Graph};
/// let g = Graph::new(3, &[(0, 1), (1, 2)], vec![0, 1, 0], 0).unwrap();
/// let f = one_hot_features(&g, &[0, 1]).unwrap();
/// assert_eq!(f.row(0), &[1.0, 0.0]);
/// assert_eq!(f.row(1), &[0.0, 1.0]);
/// assert_eq!(f.row(2), &[1.0, 0.0]);
/// ```
pub fn one_hot_features(graph: &Graph, alphabet: &[i64]) -> Result<Mat> {
    let mut f = Mat::zeros(graph.vertex_count(), alphabet.len());
    for (v, &label) in graph.vertex_labels().iter().enumerate() {
        let j = alphabet
            .binary_search(&label)
            .map_err(|_| Error::UnknownLabel(label))?;
        *f.at_mut(v, j) = 1.0;
    }
    Ok(f)
}
