//! Independent checks: the connected 1-cover predicate and an exhaustive
//! search for the maximum number of disjoint connected 1-covers.
//!
//! Nothing here shares code with the protocol; it only reads the deployment.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{Deployment, DeploymentGraph};
use crate::{BlockId, NodeId};

/// Outcome of [`verify_cover`]. Valid iff both lists are "clean": no
/// uncovered block and exactly one component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverCheck {
    pub uncovered_blocks: Vec<BlockId>,
    /// Connected components of the induced subgraph, each sorted, ordered by
    /// smallest member.
    pub components: Vec<Vec<NodeId>>,
    pub unknown_nodes: Vec<NodeId>,
}

impl CoverCheck {
    pub fn is_valid(&self) -> bool {
        self.uncovered_blocks.is_empty()
            && self.components.len() == 1
            && self.unknown_nodes.is_empty()
    }
}

impl fmt::Display for CoverCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "ok");
        }
        let mut parts = Vec::new();
        if !self.unknown_nodes.is_empty() {
            parts.push(format!("unknown nodes {:?}", self.unknown_nodes));
        }
        if !self.uncovered_blocks.is_empty() {
            parts.push(format!("uncovered blocks {:?}", self.uncovered_blocks));
        }
        match self.components.len() {
            0 => parts.push("empty member set".to_string()),
            1 => {}
            k => parts.push(format!("{k} disconnected components {:?}", self.components)),
        }
        write!(f, "{}", parts.join("; "))
    }
}

/// Connected components of the subgraph induced by `members`.
pub fn components(members: &BTreeSet<NodeId>, graph: &DeploymentGraph) -> Vec<Vec<NodeId>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &start in members {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &w in graph.neighbors(v) {
                if members.contains(&w) && seen.insert(w) {
                    comp.push(w);
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Checks that `members` holds a node in every block and induces a connected
/// communication subgraph.
pub fn verify_cover(members: &BTreeSet<NodeId>, deployment: &Deployment) -> CoverCheck {
    let n = deployment.node_count();
    let unknown_nodes: Vec<NodeId> = members.iter().copied().filter(|&v| v >= n).collect();
    let known: BTreeSet<NodeId> = members.iter().copied().filter(|&v| v < n).collect();
    let mut covered = vec![false; deployment.grid.block_count()];
    for &v in &known {
        covered[deployment.block_of(v)] = true;
    }
    CoverCheck {
        uncovered_blocks: (0..covered.len()).filter(|&b| !covered[b]).collect(),
        components: components(&known, &deployment.graph),
        unknown_nodes,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchLimits {
    pub max_nodes: usize,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self { max_nodes: 16 }
    }
}

/// Hard ceiling for the bitmask representation.
const ABSOLUTE_MAX_NODES: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxPartitions {
    pub count: usize,
    pub witness: Vec<BTreeSet<NodeId>>,
}

/// Exact maximum number of pairwise disjoint connected 1-covers.
///
/// Any connected cover contains an inclusion-minimal one, so it is enough to
/// pack minimal covers. Minimal covers are found by subset enumeration and the
/// packing is an exact branch-and-bound: take the lowest free node of the
/// scarcest block and either place it in some cover or discard it.
pub fn brute_force_max_partitions(
    deployment: &Deployment,
    limits: SearchLimits,
) -> Result<MaxPartitions> {
    let n = deployment.node_count();
    let limit = limits.max_nodes.min(ABSOLUTE_MAX_NODES);
    if n > limit {
        return Err(Error::TooLarge { nodes: n, limit });
    }
    let blocks = deployment.grid.block_count();
    let mut block_masks = vec![0u32; blocks];
    for v in 0..n {
        block_masks[deployment.block_of(v)] |= 1 << v;
    }
    let adj: Vec<u32> = (0..n)
        .map(|v| {
            deployment
                .graph
                .neighbors(v)
                .iter()
                .fold(0u32, |m, &w| m | (1 << w))
        })
        .collect();

    let is_cover = |s: u32| -> bool {
        s != 0 && block_masks.iter().all(|&b| b & s != 0) && mask_connected(s, &adj)
    };

    let full: u64 = 1 << n;
    let mut cover_flag = vec![false; full as usize];
    for s in 1..full {
        cover_flag[s as usize] = is_cover(s as u32);
    }
    let minimal: Vec<u32> = (1..full as u32)
        .filter(|&s| cover_flag[s as usize])
        .filter(|&s| {
            let mut rest = s;
            while rest != 0 {
                let bit = rest & rest.wrapping_neg();
                rest &= rest - 1;
                if cover_flag[(s & !bit) as usize] {
                    return false;
                }
            }
            true
        })
        .collect();

    let mut by_node: Vec<Vec<u32>> = vec![Vec::new(); n];
    for &c in &minimal {
        for (v, list) in by_node.iter_mut().enumerate() {
            if c & (1 << v) != 0 {
                list.push(c);
            }
        }
    }

    let mut search = Packing {
        block_masks: &block_masks,
        by_node: &by_node,
        chosen: Vec::new(),
        best: Vec::new(),
    };
    let all = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    search.run(all);

    Ok(MaxPartitions {
        count: search.best.len(),
        witness: search
            .best
            .iter()
            .map(|&m| (0..n).filter(|&v| m & (1 << v) != 0).collect())
            .collect(),
    })
}

fn mask_connected(s: u32, adj: &[u32]) -> bool {
    let start = s & s.wrapping_neg();
    let mut reached = start;
    let mut frontier = start;
    while frontier != 0 {
        let v = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let fresh = adj[v] & s & !reached;
        reached |= fresh;
        frontier |= fresh;
    }
    reached == s
}

struct Packing<'a> {
    block_masks: &'a [u32],
    by_node: &'a [Vec<u32>],
    chosen: Vec<u32>,
    best: Vec<u32>,
}

impl Packing<'_> {
    fn run(&mut self, avail: u32) {
        let (scarcest, bound) = self
            .block_masks
            .iter()
            .map(|&b| (b & avail, (b & avail).count_ones() as usize))
            .min_by_key(|&(_, c)| c)
            .expect("grid has at least one block");
        if self.chosen.len() + bound <= self.best.len() {
            return;
        }
        if bound == 0 {
            // chosen.len() > best.len() here, by the bound check above.
            self.best = self.chosen.clone();
            return;
        }
        let v = scarcest.trailing_zeros() as usize;
        for &cover in &self.by_node[v] {
            if cover & !avail == 0 {
                self.chosen.push(cover);
                self.run(avail & !cover);
                self.chosen.pop();
            }
        }
        self.run(avail & !(1 << v));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BlockGrid;

    fn grid(rows: usize, cols: usize) -> BlockGrid {
        BlockGrid::new(rows, cols, 1.0).unwrap()
    }

    fn complete_edges(n: usize) -> Vec<(NodeId, NodeId)> {
        (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect()
    }

    #[test]
    fn connected_but_uncovered() {
        // Blocks 0,1,2 each hold one node on a path; block 3 holds an isolated node.
        let d = Deployment::from_parts(grid(2, 2), &[0, 1, 2, 3], &[(0, 1), (1, 2)]);
        let check = verify_cover(&BTreeSet::from([0, 1, 2]), &d);
        assert!(!check.is_valid());
        assert_eq!(check.uncovered_blocks, vec![3]);
        assert_eq!(check.components.len(), 1);
    }

    #[test]
    fn covered_but_disconnected() {
        let d = Deployment::from_parts(grid(2, 2), &[0, 1, 2, 3], &[(0, 1), (2, 3)]);
        let check = verify_cover(&BTreeSet::from([0, 1, 2, 3]), &d);
        assert!(!check.is_valid());
        assert!(check.uncovered_blocks.is_empty());
        assert_eq!(check.components, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn covered_and_connected() {
        let d = Deployment::from_parts(grid(2, 2), &[0, 1, 2, 3], &[(0, 1), (1, 3), (3, 2)]);
        let check = verify_cover(&BTreeSet::from([0, 1, 2, 3]), &d);
        assert!(check.is_valid(), "{check}");
    }

    #[test]
    fn empty_set_is_not_a_cover() {
        let d = Deployment::from_parts(grid(1, 1), &[0], &[]);
        let check = verify_cover(&BTreeSet::new(), &d);
        assert!(!check.is_valid());
        assert!(verify_cover(&BTreeSet::from([7]), &d).unknown_nodes == vec![7]);
    }

    #[test]
    fn brute_force_single_block() {
        let d = Deployment::from_parts(grid(1, 1), &[0, 0, 0], &complete_edges(3));
        let r = brute_force_max_partitions(&d, SearchLimits::default()).unwrap();
        assert_eq!(r.count, 3);
    }

    #[test]
    fn brute_force_one_per_block() {
        let d = Deployment::from_parts(grid(2, 2), &[0, 1, 2, 3], &complete_edges(4));
        let r = brute_force_max_partitions(&d, SearchLimits::default()).unwrap();
        assert_eq!(r.count, 1);
        assert_eq!(r.witness, vec![BTreeSet::from([0, 1, 2, 3])]);
    }

    #[test]
    fn brute_force_two_per_block() {
        // Nodes 2b and 2b+1 sit in block b; every cross-block pair is linked,
        // co-block pairs are linked as well.
        let blocks = [0, 0, 1, 1, 2, 2, 3, 3];
        let d = Deployment::from_parts(grid(2, 2), &blocks, &complete_edges(8));
        let r = brute_force_max_partitions(&d, SearchLimits::default()).unwrap();
        assert_eq!(r.count, 2);
        for cover in &r.witness {
            assert!(verify_cover(cover, &d).is_valid());
        }
    }

    #[test]
    fn brute_force_connectivity_limits_count() {
        // Two nodes per block but one of block 3's nodes is isolated.
        let blocks = [0, 0, 1, 1, 2, 2, 3, 3];
        let edges: Vec<_> = complete_edges(7);
        let d = Deployment::from_parts(grid(2, 2), &blocks, &edges);
        let r = brute_force_max_partitions(&d, SearchLimits::default()).unwrap();
        assert_eq!(r.count, 1);
    }

    #[test]
    fn brute_force_refuses_large_instances() {
        let blocks = vec![0; 20];
        let d = Deployment::from_parts(grid(1, 1), &blocks, &[]);
        assert!(matches!(
            brute_force_max_partitions(&d, SearchLimits::default()),
            Err(Error::TooLarge {
                nodes: 20,
                limit: 16
            })
        ));
        assert!(brute_force_max_partitions(&d, SearchLimits { max_nodes: 20 }).is_ok());
    }
}
