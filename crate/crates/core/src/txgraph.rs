//! Undirected multigraph of sanctioned transactions: nodes are addresses,
//! each transaction with a sanctioned sender or receiver is one edge.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{SanctionList, TxRecord};

/// Receiver used for contract-creation transactions.
pub const NULL_ADDRESS: &str = "0x0000000000000000000000000000000000000000";

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Era {
    Pre,
    Post,
}

impl Era {
    pub fn of(block: u64, cutoff: u64) -> Self {
        if block >= cutoff {
            Era::Post
        } else {
            Era::Pre
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Era::Pre => "pre",
            Era::Post => "post",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EraFilter {
    Pre,
    Post,
    #[default]
    All,
}

impl EraFilter {
    pub fn admits(self, era: Era) -> bool {
        match self {
            EraFilter::All => true,
            EraFilter::Pre => era == Era::Pre,
            EraFilter::Post => era == Era::Post,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub hash: String,
    pub era: Era,
}

impl Edge {
    pub fn is_loop(&self) -> bool {
        self.from == self.to
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TxGraph {
    pub nodes: BTreeSet<String>,
    pub edges: Vec<Edge>,
    pub filter: EraFilter,
}

pub fn build_graph(txs: &[TxRecord], sanctions: &SanctionList, filter: EraFilter, cutoff: u64) -> TxGraph {
    let mut g = TxGraph {
        filter,
        ..Default::default()
    };
    for tx in txs {
        let era = Era::of(tx.block_number, cutoff);
        if !filter.admits(era) || !tx.is_sanctioned(sanctions) {
            continue;
        }
        let to = tx.to_address.clone().unwrap_or_else(|| NULL_ADDRESS.to_string());
        g.nodes.insert(tx.from_address.clone());
        g.nodes.insert(to.clone());
        g.edges.push(Edge {
            from: tx.from_address.clone(),
            to,
            hash: tx.hash.clone(),
            era,
        });
    }
    g
}

impl TxGraph {
    /// Degree of every node; a self-loop counts twice.
    pub fn degrees(&self) -> BTreeMap<&str, usize> {
        let mut deg: BTreeMap<&str, usize> = self.nodes.iter().map(|n| (n.as_str(), 0)).collect();
        for e in &self.edges {
            *deg.get_mut(e.from.as_str()).expect("endpoint is a node") += 1;
            *deg.get_mut(e.to.as_str()).expect("endpoint is a node") += 1;
        }
        deg
    }

    /// Sender → receiver transaction counts per era.
    pub fn flows(&self) -> Vec<Flow> {
        let mut counts: BTreeMap<(&str, &str, Era), u64> = BTreeMap::new();
        for e in &self.edges {
            *counts.entry((&e.from, &e.to, e.era)).or_default() += 1;
        }
        counts
            .into_iter()
            .map(|((s, r, era), count)| Flow {
                sender: s.to_string(),
                receiver: r.to_string(),
                era,
                count,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flow {
    pub sender: String,
    pub receiver: String,
    pub era: Era,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeDegree {
    pub address: String,
    pub degree: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GraphSummary {
    pub nodes: usize,
    pub edges: usize,
    pub self_loops: usize,
    /// degree → number of nodes with that degree
    pub degree_histogram: BTreeMap<usize, usize>,
    pub components: usize,
    pub largest_component: usize,
    pub top_nodes: Vec<NodeDegree>,
    pub edges_by_era: BTreeMap<Era, usize>,
}

struct Dsu {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

pub const TOP_NODES: usize = 10;

pub fn graph_summary(g: &TxGraph) -> GraphSummary {
    let index: HashMap<&str, usize> = g.nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut dsu = Dsu::new(g.nodes.len());
    for e in &g.edges {
        dsu.union(index[e.from.as_str()], index[e.to.as_str()]);
    }
    let mut comp_sizes: HashMap<usize, usize> = HashMap::new();
    for i in 0..g.nodes.len() {
        *comp_sizes.entry(dsu.find(i)).or_default() += 1;
    }

    let deg = g.degrees();
    let mut histogram = BTreeMap::new();
    for &d in deg.values() {
        *histogram.entry(d).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = deg.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let mut by_era = BTreeMap::new();
    for e in &g.edges {
        *by_era.entry(e.era).or_default() += 1;
    }

    GraphSummary {
        nodes: g.nodes.len(),
        edges: g.edges.len(),
        self_loops: g.edges.iter().filter(|e| e.is_loop()).count(),
        degree_histogram: histogram,
        components: comp_sizes.len(),
        largest_component: comp_sizes.values().copied().max().unwrap_or(0),
        top_nodes: ranked
            .into_iter()
            .take(TOP_NODES)
            .map(|(a, d)| NodeDegree {
                address: a.to_string(),
                degree: d,
            })
            .collect(),
        edges_by_era: by_era,
    }
}

pub fn write_edges_csv<W: Write>(g: &TxGraph, w: W) -> Result<(), GraphError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["from", "to", "hash", "era"])?;
    for e in &g.edges {
        out.write_record([e.from.as_str(), e.to.as_str(), e.hash.as_str(), e.era.as_str()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_flows_csv<W: Write>(g: &TxGraph, w: W) -> Result<(), GraphError> {
    let mut out = csv::Writer::from_writer(w);
    for f in g.flows() {
        out.serialize(f)?;
    }
    out.flush()?;
    Ok(())
}
