use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::unionfind::UnionFind;

use super::{BoundaryCondition, Configuration};

/// A region's graph with every boundary block contracted to a single node.
#[derive(Clone, Debug)]
pub struct ContractedGraph {
    node_of: Vec<u32>,
    num_nodes: usize,
    ends: Vec<[u32; 2]>,
    adj_start: Vec<u32>,
    adj: Vec<(u32, u32)>,
}

impl ContractedGraph {
    pub fn new(region: &Region, bc: &BoundaryCondition) -> Result<ContractedGraph> {
        bc.check_region(region)?;
        let n = region.num_vertices();
        let mut node_of = vec![u32::MAX; n];
        let mut next = 0u32;
        for block in bc.blocks() {
            for &v in block {
                node_of[v as usize] = next;
            }
            next += 1;
        }
        for slot in node_of.iter_mut() {
            if *slot == u32::MAX {
                *slot = next;
                next += 1;
            }
        }
        let num_nodes = next as usize;
        let ends: Vec<[u32; 2]> =
            region.edges().iter().map(|&[u, v]| [node_of[u as usize], node_of[v as usize]]).collect();
        let mut adj_start = vec![0u32; num_nodes + 1];
        for &[a, b] in &ends {
            adj_start[a as usize + 1] += 1;
            adj_start[b as usize + 1] += 1;
        }
        for i in 0..num_nodes {
            adj_start[i + 1] += adj_start[i];
        }
        let mut fill = adj_start.clone();
        let mut adj = vec![(0u32, 0u32); 2 * ends.len()];
        for (e, &[a, b]) in ends.iter().enumerate() {
            adj[fill[a as usize] as usize] = (b, e as u32);
            fill[a as usize] += 1;
            adj[fill[b as usize] as usize] = (a, e as u32);
            fill[b as usize] += 1;
        }
        Ok(ContractedGraph { node_of, num_nodes, ends, adj_start, adj })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.ends.len()
    }

    /// Node containing region vertex `v`.
    #[inline]
    pub fn node(&self, v: u32) -> u32 {
        self.node_of[v as usize]
    }

    #[inline]
    pub fn edge(&self, e: u32) -> [u32; 2] {
        self.ends[e as usize]
    }

    pub fn edges(&self) -> &[[u32; 2]] {
        &self.ends
    }

    #[inline]
    pub fn neighbors(&self, node: u32) -> &[(u32, u32)] {
        let lo = self.adj_start[node as usize] as usize;
        let hi = self.adj_start[node as usize + 1] as usize;
        &self.adj[lo..hi]
    }

    /// Whether nodes `a` and `b` are joined by open edges other than `skip`.
    pub fn connected_without(&self, config: &Configuration, a: u32, b: u32, skip: u32) -> bool {
        let mut search = BiSearch::new(self.num_nodes);
        search.connected(self, |e| e != skip && config.is_open(e), a, b)
    }
}

/// Reusable bidirectional breadth-first search over a contracted graph.
#[derive(Clone, Debug)]
pub(crate) struct BiSearch {
    mark: Vec<u32>,
    stamp: u32,
    queue_a: Vec<u32>,
    queue_b: Vec<u32>,
}

impl BiSearch {
    pub(crate) fn new(num_nodes: usize) -> BiSearch {
        BiSearch { mark: vec![0; num_nodes], stamp: 0, queue_a: Vec::new(), queue_b: Vec::new() }
    }

    fn next_stamps(&mut self) -> (u32, u32) {
        if self.stamp >= u32::MAX - 2 {
            self.mark.fill(0);
            self.stamp = 0;
        }
        self.stamp += 2;
        (self.stamp - 1, self.stamp)
    }

    /// Alternates one expansion from each side, so the cost is bounded by twice
    /// the smaller of the two explored clusters.
    pub(crate) fn connected<F: Fn(u32) -> bool>(&mut self, graph: &ContractedGraph, open: F, a: u32, b: u32) -> bool {
        if a == b {
            return true;
        }
        let (sa, sb) = self.next_stamps();
        self.queue_a.clear();
        self.queue_b.clear();
        self.mark[a as usize] = sa;
        self.mark[b as usize] = sb;
        self.queue_a.push(a);
        self.queue_b.push(b);
        let (mut ha, mut hb) = (0usize, 0usize);
        loop {
            if ha == self.queue_a.len() || hb == self.queue_b.len() {
                return false;
            }
            let x = self.queue_a[ha];
            ha += 1;
            for &(y, e) in graph.neighbors(x) {
                if !open(e) {
                    continue;
                }
                let m = self.mark[y as usize];
                if m == sb {
                    return true;
                }
                if m != sa {
                    self.mark[y as usize] = sa;
                    self.queue_a.push(y);
                }
            }
            let x = self.queue_b[hb];
            hb += 1;
            for &(y, e) in graph.neighbors(x) {
                if !open(e) {
                    continue;
                }
                let m = self.mark[y as usize];
                if m == sa {
                    return true;
                }
                if m != sb {
                    self.mark[y as usize] = sb;
                    self.queue_b.push(y);
                }
            }
        }
    }
}

/// Union-find over contracted nodes holding the clusters of a configuration.
#[derive(Clone, Debug)]
pub struct ClusterStructure {
    uf: UnionFind,
    node_of: Vec<u32>,
    ends: Vec<[u32; 2]>,
}

impl ClusterStructure {
    pub fn new(region: &Region, bc: &BoundaryCondition, config: &Configuration) -> Result<ClusterStructure> {
        let graph = ContractedGraph::new(region, bc)?;
        if config.len() != region.num_edges() {
            return Err(Error::Mismatch("configuration length differs from edge count".into()));
        }
        Ok(ClusterStructure::from_graph(&graph, config))
    }

    pub fn from_graph(graph: &ContractedGraph, config: &Configuration) -> ClusterStructure {
        let mut cs = ClusterStructure {
            uf: UnionFind::new(graph.num_nodes()),
            node_of: graph.node_of.clone(),
            ends: graph.ends.clone(),
        };
        cs.rebuild(config);
        cs
    }

    /// Recomputes the clusters from scratch.
    pub fn rebuild(&mut self, config: &Configuration) {
        self.uf.reset(self.uf.len());
        for e in config.open_edges() {
            let [a, b] = self.ends[e as usize];
            self.uf.union(a, b);
        }
    }

    /// `k_xi(omega)`.
    pub fn count(&self) -> usize {
        self.uf.components()
    }

    /// Cluster representative of region vertex `v`.
    pub fn root(&mut self, v: u32) -> u32 {
        let node = self.node_of[v as usize];
        self.uf.find(node)
    }

    pub fn connected(&mut self, u: u32, v: u32) -> bool {
        self.root(u) == self.root(v)
    }

    /// Records edge `e` as opened; returns the change in cluster count (0 or -1).
    pub fn open_edge(&mut self, e: u32) -> i64 {
        let [a, b] = self.ends[e as usize];
        if self.uf.union(a, b) {
            -1
        } else {
            0
        }
    }
}

/// Number of clusters `k_xi(omega)` after identifying wired boundary vertices.
pub fn cluster_count(region: &Region, bc: &BoundaryCondition, config: &Configuration) -> Result<usize> {
    Ok(ClusterStructure::new(region, bc, config)?.count())
}

/// Independent recount by depth-first search on the uncontracted graph, with
/// each boundary block joined through a virtual hub vertex.
pub fn cluster_count_dfs(region: &Region, bc: &BoundaryCondition, config: &Configuration) -> Result<usize> {
    bc.check_region(region)?;
    let n = region.num_vertices();
    let hubs = bc.blocks().len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + hubs];
    for e in config.open_edges() {
        let [u, v] = region.edge(e);
        adj[u as usize].push(v as usize);
        adj[v as usize].push(u as usize);
    }
    for (i, block) in bc.blocks().iter().enumerate() {
        for &v in block {
            adj[n + i].push(v as usize);
            adj[v as usize].push(n + i);
        }
    }
    let mut seen = vec![false; n + hubs];
    let mut count = 0;
    for start in 0..n {
        if seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    Ok(count)
}
