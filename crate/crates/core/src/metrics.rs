//! Evaluation quantities: rounds, partition diameter, message overhead.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DeploymentGraph;
use crate::NodeId;

/// Wire-level message kinds as they appear in a trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    Selectlist,
    Selected,
    Confirm,
    Include,
    /// Partition termination broadcast with its success flag (0 or 1).
    Success(u8),
    /// Recovery coordinator pushing `temp` and the block list to participants.
    RecoveryUpdate,
    FaultRecovered,
    RecoveryFailed,
}

/// One link-level transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: u32,
    pub sender: NodeId,
    pub kind: MessageKind,
    pub partition: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSnapshot {
    pub round: u32,
    pub partition: NodeId,
    pub members: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecoveryVerdict {
    Recovered,
    Failed,
    /// Recovery disabled; the partition was retired at its first fault.
    Retired,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryRecord {
    pub time: u64,
    pub partition: NodeId,
    pub failed: NodeId,
    pub outcome: RecoveryVerdict,
    pub recruited: Vec<NodeId>,
    pub messages: usize,
}

/// Ordered record of a partitioning run plus any later recovery activity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub snapshots: Vec<PartitionSnapshot>,
    pub recoveries: Vec<RecoveryRecord>,
}

impl Trace {
    pub fn push(&mut self, round: u32, sender: NodeId, kind: MessageKind, partition: NodeId) {
        debug_assert!(self.records.last().is_none_or(|r| r.round <= round));
        self.records.push(TraceRecord {
            round,
            sender,
            kind,
            partition,
        });
    }
}

/// Largest hop distance between two members inside the subgraph induced by
/// `members` (all communication edges between members count).
pub fn partition_diameter(members: &BTreeSet<NodeId>, graph: &DeploymentGraph) -> Result<usize> {
    if members.is_empty() {
        return Err(Error::invalid("members", "partition is empty"));
    }
    let mut diameter = 0;
    for &src in members {
        let dist = bfs_within(src, members, graph);
        if dist.len() != members.len() {
            let components = crate::oracle::components(members, graph).len();
            return Err(Error::Disconnected { components });
        }
        diameter = diameter.max(dist.into_iter().map(|(_, d)| d).max().unwrap_or(0));
    }
    Ok(diameter)
}

fn bfs_within(
    src: NodeId,
    members: &BTreeSet<NodeId>,
    graph: &DeploymentGraph,
) -> Vec<(NodeId, usize)> {
    let mut seen = BTreeSet::from([src]);
    let mut out = vec![(src, 0)];
    let mut queue = VecDeque::from([(src, 0)]);
    while let Some((v, d)) = queue.pop_front() {
        for &w in graph.neighbors(v) {
            if members.contains(&w) && seen.insert(w) {
                out.push((w, d + 1));
                queue.push_back((w, d + 1));
            }
        }
    }
    out
}

/// Depth of a rooted tree given as `(parent, child)` edges.
pub fn tree_depth(root: NodeId, edges: &BTreeSet<(NodeId, NodeId)>) -> usize {
    let mut depth = 0;
    let mut frontier = vec![root];
    loop {
        let next: Vec<NodeId> = edges
            .iter()
            .filter(|(p, _)| frontier.contains(p))
            .map(|&(_, c)| c)
            .collect();
        if next.is_empty() {
            return depth;
        }
        depth += 1;
        frontier = next;
    }
}

/// Partitioning transmissions in the trace divided by the node count.
pub fn messages_per_node(trace: &Trace, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    trace.records.len() as f64 / n as f64
}

/// Round in which the last leader broadcast its success flag; 0 for an empty trace.
pub fn rounds_to_complete(trace: &Trace) -> u32 {
    trace
        .records
        .iter()
        .filter(|r| matches!(r.kind, MessageKind::Success(_)))
        .map(|r| r.round)
        .max()
        .unwrap_or(0)
}

/// Every complete partition holds a node in each block, so the scarcest
/// block bounds the number of disjoint covers.
pub fn max_partitions_upper_bound(occupancy: &[usize]) -> usize {
    occupancy.iter().copied().min().unwrap_or(0)
}
