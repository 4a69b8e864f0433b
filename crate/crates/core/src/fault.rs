//! Local recovery of a partition after a single member fails.
//!
//! The failed node's tree parent and children (`S_i`) detect the fault. A
//! coordinator `leader_temp` is chosen (the minimum-id child when the leader
//! failed, else the parent) and grows a participant set `temp` round by round:
//!
//! - participants propose unattached `S_i` members they can reach,
//! - then free neighbours lying in blocks still awaiting restoration,
//! - and, having neither, their free neighbour of maximum degree (a bridge).
//!
//! The coordinator accepts every reattachment, one cover recruit per block,
//! and a single bridge only in rounds with nothing else to accept.
//! Recovery succeeds once every `S_i` member is reachable from `leader_temp`
//! and every restore block is covered again; it fails once `temp` stops
//! growing. Bridges that end up unnecessary are released before commit. A
//! failed recovery commits nothing.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Deployment;
use crate::metrics::MessageKind;
use crate::protocol::Partition;
use crate::{BlockId, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultEvent {
    pub node: NodeId,
    pub time: u64,
}

/// Parent (if any) and children of `f` in the partition tree.
pub fn detect_fault(partition: &Partition, f: NodeId) -> Result<BTreeSet<NodeId>> {
    if !partition.members.contains(&f) {
        return Err(Error::NotAMember(f));
    }
    let mut s_i = partition.children_of(f);
    if let Some(p) = partition.parent_of(f) {
        s_i.insert(p);
    }
    Ok(s_i)
}

/// Minimum-id child when `f` led the partition, otherwise `f`'s parent.
/// `None` when `S_i` is empty and nobody can coordinate.
pub fn select_temp_leader(
    partition: &Partition,
    f: NodeId,
    s_i: &BTreeSet<NodeId>,
) -> Option<NodeId> {
    if f == partition.leader {
        s_i.first().copied()
    } else {
        partition.parent_of(f).filter(|p| s_i.contains(p))
    }
}

/// Blocks of `{f} ∪ S_i` other than `leader_temp` itself, minus the block
/// `leader_temp` already covers.
pub fn compute_restore_blocks(
    f: NodeId,
    s_i: &BTreeSet<NodeId>,
    leader_temp: NodeId,
    deployment: &Deployment,
) -> BTreeSet<BlockId> {
    let own = deployment.block_of(leader_temp);
    std::iter::once(f)
        .chain(s_i.iter().copied())
        .filter(|&v| v != leader_temp)
        .map(|v| deployment.block_of(v))
        .filter(|&b| b != own)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureReason {
    /// The failed node had no tree neighbour.
    Isolated,
    /// No participant could propose anything new.
    Stuck,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecoveryOutcome {
    Recovered {
        partition: Partition,
        /// Free nodes that joined the partition.
        recruited: BTreeSet<NodeId>,
    },
    Failed(FailureReason),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveryReport {
    pub outcome: RecoveryOutcome,
    pub s_i: BTreeSet<NodeId>,
    pub leader_temp: Option<NodeId>,
    pub restore_blocks: BTreeSet<BlockId>,
    /// Final participant set (before unnecessary bridges are released).
    pub temp: BTreeSet<NodeId>,
    pub rounds: u32,
    /// Every transmission made during recovery, in order.
    pub transmissions: Vec<(NodeId, MessageKind)>,
}

impl RecoveryReport {
    pub fn is_recovered(&self) -> bool {
        matches!(self.outcome, RecoveryOutcome::Recovered { .. })
    }

    pub fn recruited(&self) -> BTreeSet<NodeId> {
        match &self.outcome {
            RecoveryOutcome::Recovered { recruited, .. } => recruited.clone(),
            RecoveryOutcome::Failed(_) => BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Join {
    Reattach,
    Cover,
    Bridge,
}

struct Recovery<'a> {
    deployment: &'a Deployment,
    free: &'a BTreeSet<NodeId>,
    s_i: BTreeSet<NodeId>,
    leader_temp: NodeId,
    restore: BTreeSet<BlockId>,
    /// Tree component (of the partition minus `f`) each remaining member is in.
    component: BTreeMap<NodeId, usize>,
    components: Vec<BTreeSet<NodeId>>,
    attached: BTreeSet<NodeId>,
    /// Attached nodes per block.
    block_count: Vec<usize>,
    temp: BTreeSet<NodeId>,
    /// Recovery-tree parent of each non-coordinator participant.
    temp_parent: BTreeMap<NodeId, NodeId>,
    /// Non-participants adjacent to `temp`, with their smallest-id participant neighbour.
    frontier: BTreeMap<NodeId, NodeId>,
    joins: Vec<(NodeId, NodeId, Join)>,
    transmissions: Vec<(NodeId, MessageKind)>,
}

impl Recovery<'_> {
    fn block(&self, v: NodeId) -> BlockId {
        self.deployment.block_of(v)
    }

    fn restored(&self, b: BlockId) -> bool {
        self.block_count[b] > 0
    }

    fn mark(&mut self, v: NodeId) {
        if self.attached.insert(v) {
            self.block_count[self.deployment.block_of(v)] += 1;
        }
    }

    fn unmark(&mut self, v: NodeId) {
        if self.attached.remove(&v) {
            self.block_count[self.deployment.block_of(v)] -= 1;
        }
    }

    fn done(&self) -> bool {
        self.s_i.is_subset(&self.attached) && self.restore.iter().all(|&b| self.restored(b))
    }

    fn temp_forwarders(&self) -> BTreeSet<NodeId> {
        let mut out: BTreeSet<NodeId> = self.temp_parent.values().copied().collect();
        out.insert(self.leader_temp);
        out
    }

    /// Records `i` as a participant able to propose each of its neighbours.
    fn extend_frontier(&mut self, i: NodeId) {
        for &w in self.deployment.graph.neighbors(i) {
            if !self.temp.contains(&w) {
                self.frontier
                    .entry(w)
                    .and_modify(|p| *p = (*p).min(i))
                    .or_insert(i);
            }
        }
    }

    fn attach(&mut self, proposer: NodeId, w: NodeId, kind: Join) {
        if kind == Join::Reattach {
            let c = self.component[&w];
            for v in self.components[c].clone() {
                self.mark(v);
            }
        } else {
            self.mark(w);
        }
        self.temp.insert(w);
        self.frontier.remove(&w);
        self.extend_frontier(w);
        self.temp_parent.insert(w, proposer);
        self.joins.push((proposer, w, kind));
    }

    /// One recovery round. Returns whether `temp` grew.
    ///
    /// Every participant proposes unattached `S_i` neighbours, and per
    /// unrestored `B_S` block its lowest-degree free neighbour there; one
    /// without such proposals offers its highest-degree free neighbour as a
    /// bridge. The coordinator accepts all reattachments, one recruit per
    /// block, and a bridge only when nothing else was accepted. A node offered
    /// by several participants hangs under the smallest id.
    fn round(&mut self) -> bool {
        for &i in &self.temp {
            // Lists are merged on the way up the temp tree.
            if i != self.leader_temp {
                self.transmissions.push((i, MessageKind::Selectlist));
            }
        }
        let graph = &self.deployment.graph;
        let mut reattach: Vec<(NodeId, NodeId)> = Vec::new();
        let mut cover: BTreeMap<BlockId, (usize, NodeId, NodeId)> = BTreeMap::new();
        let mut bridge: Option<(std::cmp::Reverse<usize>, NodeId, NodeId)> = None;
        for (&w, &i) in &self.frontier {
            if self.attached.contains(&w) {
                continue;
            }
            if self.s_i.contains(&w) {
                reattach.push((w, i));
            } else if self.free.contains(&w) {
                let b = self.block(w);
                if self.restore.contains(&b) && !self.restored(b) {
                    let key = (graph.degree(w), w, i);
                    cover
                        .entry(b)
                        .and_modify(|cur| *cur = (*cur).min(key))
                        .or_insert(key);
                }
                let key = (std::cmp::Reverse(graph.degree(w)), w, i);
                bridge = Some(bridge.map_or(key, |cur| cur.min(key)));
            }
        }
        let before = self.temp.len();
        // Each tree component left by f holds exactly one S_i member.
        for (w, proposer) in reattach {
            self.attach(proposer, w, Join::Reattach);
        }
        for (b, (_, w, proposer)) in cover {
            if !self.restored(b) && !self.attached.contains(&w) {
                self.attach(proposer, w, Join::Cover);
            }
        }
        if self.temp.len() == before {
            if let Some((_, w, proposer)) = bridge {
                self.attach(proposer, w, Join::Bridge);
            }
        }
        self.temp.len() > before
    }

    /// Drops recruits that are tree leaves among the new attachments and
    /// whose removal keeps the success predicate.
    fn release_unneeded(&mut self) {
        loop {
            let recruits: Vec<NodeId> = self
                .joins
                .iter()
                .filter(|(_, _, k)| *k != Join::Reattach)
                .map(|&(_, w, _)| w)
                .collect();
            let leaf = recruits.into_iter().find(|&w| {
                let has_child = self.joins.iter().any(|&(p, _, _)| p == w);
                if has_child {
                    return false;
                }
                self.unmark(w);
                let ok = self.done();
                self.mark(w);
                ok
            });
            match leaf {
                Some(w) => {
                    self.unmark(w);
                    self.joins.retain(|&(_, c, _)| c != w);
                }
                None => return,
            }
        }
    }
}

/// Runs the recovery procedure for the failure of `f`. Pure: the caller
/// commits the returned partition (or retires the old one).
pub fn recover(
    partition: &Partition,
    f: NodeId,
    free: &BTreeSet<NodeId>,
    deployment: &Deployment,
) -> Result<RecoveryReport> {
    let s_i = detect_fault(partition, f)?;
    let Some(leader_temp) = select_temp_leader(partition, f, &s_i) else {
        return Ok(RecoveryReport {
            outcome: RecoveryOutcome::Failed(FailureReason::Isolated),
            s_i,
            leader_temp: None,
            restore_blocks: BTreeSet::new(),
            temp: BTreeSet::new(),
            rounds: 0,
            transmissions: Vec::new(),
        });
    };
    let restore = compute_restore_blocks(f, &s_i, leader_temp, deployment);

    // Tree components of the partition without f.
    let edges: Vec<(NodeId, NodeId)> = partition
        .tree_edges
        .iter()
        .copied()
        .filter(|&(p, c)| p != f && c != f)
        .collect();
    let mut component = BTreeMap::new();
    let mut components = Vec::new();
    for &root in partition.members.iter().filter(|&&v| v != f) {
        if component.contains_key(&root) {
            continue;
        }
        let idx = components.len();
        let mut comp = BTreeSet::from([root]);
        let mut stack = vec![root];
        component.insert(root, idx);
        while let Some(v) = stack.pop() {
            for &(p, c) in &edges {
                let other = if p == v {
                    c
                } else if c == v {
                    p
                } else {
                    continue;
                };
                if comp.insert(other) {
                    component.insert(other, idx);
                    stack.push(other);
                }
            }
        }
        components.push(comp);
    }
    let core = components[component[&leader_temp]].clone();

    let mut rec = Recovery {
        deployment,
        free,
        s_i: s_i.clone(),
        leader_temp,
        restore: restore.clone(),
        component,
        components,
        attached: BTreeSet::new(),
        block_count: vec![0; deployment.grid.block_count()],
        temp: BTreeSet::from([leader_temp]),
        temp_parent: BTreeMap::new(),
        frontier: BTreeMap::new(),
        joins: Vec::new(),
        transmissions: Vec::new(),
    };

    for v in core {
        rec.mark(v);
    }
    rec.extend_frontier(leader_temp);

    let mut rounds = 0;
    let recovered = loop {
        if rec.done() {
            break true;
        }
        rounds += 1;
        if !rec.round() {
            break false;
        }
        if !rec.done() {
            for v in rec.temp_forwarders() {
                rec.transmissions.push((v, MessageKind::RecoveryUpdate));
            }
        }
    };

    if !recovered {
        for v in rec.temp_forwarders() {
            rec.transmissions.push((v, MessageKind::RecoveryFailed));
        }
        return Ok(RecoveryReport {
            outcome: RecoveryOutcome::Failed(FailureReason::Stuck),
            s_i,
            leader_temp: Some(leader_temp),
            restore_blocks: restore,
            temp: rec.temp,
            rounds,
            transmissions: rec.transmissions,
        });
    }

    rec.release_unneeded();

    let mut out = partition.clone();
    out.members.remove(&f);
    out.tree_edges.retain(|&(p, c)| p != f && c != f);
    if f == partition.leader {
        out.leader = leader_temp;
    }
    let mut recruited = BTreeSet::new();
    for &(p, c, kind) in &rec.joins {
        if kind != Join::Reattach {
            recruited.insert(c);
        }
        out.members.insert(c);
        out.tree_edges.insert((p, c));
    }
    out.covered_blocks = out
        .members
        .iter()
        .map(|&v| deployment.block_of(v))
        .collect();
    out.complete = out.covered_blocks.len() == deployment.grid.block_count();
    debug_assert!(out.is_well_formed());
    debug_assert!(out.complete);

    for v in out.forwarders() {
        rec.transmissions.push((v, MessageKind::FaultRecovered));
    }
    Ok(RecoveryReport {
        outcome: RecoveryOutcome::Recovered {
            partition: out,
            recruited,
        },
        s_i,
        leader_temp: Some(leader_temp),
        restore_blocks: restore,
        temp: rec.temp,
        rounds,
        transmissions: rec.transmissions,
    })
}
