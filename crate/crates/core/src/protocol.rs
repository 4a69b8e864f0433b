//! Round-synchronous construction of disjoint connected set covers.
//!
//! Leaders elect themselves with probability `l_prob` and each grows one
//! partition concurrently. A round is one full cycle over every running
//! partition:
//!
//! 1. `Selectlist` convergecast: every member proposes at most one free
//!    neighbour per uncovered block (minimum degree, then minimum id) and
//!    merges its children's lists before forwarding to its parent.
//! 2. The leader sends `Selected` to every proposed candidate, routed down the
//!    tree through the proposing member.
//! 3. A free node holding offers joins the partition whose proposing sender
//!    has the minimum degree (then smaller partition id, then smaller sender
//!    id), adopts that sender as parent and sends `Confirm` up to the leader.
//! 4. The leader floods `Include` for every confirmed node; once all blocks
//!    are covered it floods `Success(1)`. A leader whose merged list is empty
//!    while blocks remain uncovered floods `Success(0)` and its partition
//!    dissolves back into free nodes.
//!
//! Neighbour tables are refreshed from actual node status at each round
//! boundary. Degrees are the static deployment degrees.
//!
//! Message accounting counts link-level transmissions: a routed message costs
//! one transmission per hop, a flooded broadcast one transmission by the
//! leader plus one by every member that has tree children.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Deployment;
use crate::metrics::{MessageKind, PartitionSnapshot, Trace};
use crate::rng::rng_from;
use crate::{BlockId, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Free,
    Member,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    None,
    Leader,
}

/// What a node knows about one neighbour.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeighborEntry {
    pub id: NodeId,
    pub block: BlockId,
    pub degree: usize,
    pub status: Status,
}

/// Local protocol state of one sensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeState {
    pub id: NodeId,
    pub block: BlockId,
    pub degree: usize,
    pub status: Status,
    pub role: Role,
    pub partition: Option<NodeId>,
    pub parent: Option<NodeId>,
    pub children: BTreeSet<NodeId>,
    pub neighbors: Vec<NeighborEntry>,
    /// Per-block coverage as known for the node's own partition.
    pub block_status: Vec<bool>,
}

impl NodeState {
    pub fn all_covered(&self) -> bool {
        self.block_status.iter().all(|&c| c)
    }

    pub fn covered_blocks(&self) -> BTreeSet<BlockId> {
        (0..self.block_status.len())
            .filter(|&b| self.block_status[b])
            .collect()
    }

    fn reset_to_free(&mut self) {
        self.status = Status::Free;
        self.role = Role::None;
        self.partition = None;
        self.parent = None;
        self.children.clear();
        self.block_status.iter_mut().for_each(|c| *c = false);
    }
}

/// Initial state for every node of a deployment: all free, full neighbour tables.
pub fn initial_states(deployment: &Deployment) -> Vec<NodeState> {
    let graph = &deployment.graph;
    let blocks = deployment.grid.block_count();
    (0..deployment.node_count())
        .map(|id| NodeState {
            id,
            block: deployment.block_of(id),
            degree: graph.degree(id),
            status: Status::Free,
            role: Role::None,
            partition: None,
            parent: None,
            children: BTreeSet::new(),
            neighbors: graph
                .neighbors(id)
                .iter()
                .map(|&j| NeighborEntry {
                    id: j,
                    block: deployment.block_of(j),
                    degree: graph.degree(j),
                    status: Status::Free,
                })
                .collect(),
            block_status: vec![false; blocks],
        })
        .collect()
}

/// A free node proposed for inclusion, with the member that proposed it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub node: NodeId,
    pub block: BlockId,
    pub degree: usize,
    pub proposer: NodeId,
    pub proposer_degree: usize,
}

impl Candidate {
    /// Preference order within one block: lower is better.
    fn rank(&self) -> (usize, NodeId, usize, NodeId) {
        (self.degree, self.node, self.proposer_degree, self.proposer)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Message {
    Selectlist {
        partition: NodeId,
        sender: NodeId,
        candidates: Vec<Candidate>,
    },
    /// Delivered to `target` by `sender`, the member that proposed it.
    Selected {
        partition: NodeId,
        sender: NodeId,
        sender_degree: usize,
        target: NodeId,
        block_status: Vec<bool>,
    },
    Confirm {
        partition: NodeId,
        sender: NodeId,
    },
    Include {
        partition: NodeId,
        sender: NodeId,
        node: NodeId,
    },
    Success {
        partition: NodeId,
        sender: NodeId,
        flag: u8,
    },
}

/// A leader-rooted tree of members.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    /// Stable identity: the node id of the leader that founded it.
    pub id: NodeId,
    pub leader: NodeId,
    pub members: BTreeSet<NodeId>,
    /// `(parent, child)` pairs.
    pub tree_edges: BTreeSet<(NodeId, NodeId)>,
    pub covered_blocks: BTreeSet<BlockId>,
    pub complete: bool,
}

impl Partition {
    pub fn singleton(leader: NodeId, block: BlockId, block_count: usize) -> Self {
        Self {
            id: leader,
            leader,
            members: BTreeSet::from([leader]),
            tree_edges: BTreeSet::new(),
            covered_blocks: BTreeSet::from([block]),
            complete: block_count == 1,
        }
    }

    pub fn parent_of(&self, v: NodeId) -> Option<NodeId> {
        self.tree_edges
            .iter()
            .find(|&&(_, c)| c == v)
            .map(|&(p, _)| p)
    }

    pub fn children_of(&self, v: NodeId) -> BTreeSet<NodeId> {
        self.tree_edges
            .range((v, 0)..=(v, NodeId::MAX))
            .map(|&(_, c)| c)
            .collect()
    }

    /// Members that transmit when flooding a broadcast from the leader.
    pub fn forwarders(&self) -> BTreeSet<NodeId> {
        let mut out: BTreeSet<NodeId> = self.tree_edges.iter().map(|&(p, _)| p).collect();
        out.insert(self.leader);
        out
    }

    /// Checks the tree invariants: rooted at the leader, spanning exactly
    /// the members, one parent per non-root member.
    pub fn is_well_formed(&self) -> bool {
        if !self.members.contains(&self.leader) {
            return false;
        }
        if self.tree_edges.len() + 1 != self.members.len() {
            return false;
        }
        let mut parent_count: BTreeMap<NodeId, usize> = BTreeMap::new();
        for &(p, c) in &self.tree_edges {
            if !self.members.contains(&p) || !self.members.contains(&c) || c == self.leader {
                return false;
            }
            *parent_count.entry(c).or_default() += 1;
        }
        if parent_count.values().any(|&k| k != 1) {
            return false;
        }
        let mut reached = BTreeSet::from([self.leader]);
        let mut stack = vec![self.leader];
        while let Some(v) = stack.pop() {
            for c in self.children_of(v) {
                if reached.insert(c) {
                    stack.push(c);
                }
            }
        }
        reached == self.members
    }
}

/// Self-election: node `i` becomes a leader when its draw `r` satisfies
/// `r <= l_prob`. Draws are taken in node-id order from one seeded stream.
pub fn elect_leaders(nodes: &mut [NodeState], l_prob: f64, seed: u64) -> Result<BTreeSet<NodeId>> {
    check_l_prob(l_prob)?;
    let mut rng = rng_from(seed);
    let leaders: BTreeSet<NodeId> = nodes
        .iter()
        .filter(|_| rng.gen::<f64>() <= l_prob)
        .map(|n| n.id)
        .collect();
    if leaders.is_empty() {
        return Err(Error::NoLeaders { attempts: 1 });
    }
    for &l in &leaders {
        make_leader(&mut nodes[l]);
    }
    Ok(leaders)
}

pub(crate) fn check_l_prob(l_prob: f64) -> Result<()> {
    if !(l_prob > 0.0 && l_prob < 1.0) {
        return Err(Error::invalid(
            "l_prob",
            format!("must lie in (0, 1), got {l_prob}"),
        ));
    }
    Ok(())
}

fn make_leader(node: &mut NodeState) {
    node.role = Role::Leader;
    node.status = Status::Member;
    node.partition = Some(node.id);
    node.parent = None;
    node.children.clear();
    node.block_status.iter_mut().for_each(|c| *c = false);
    node.block_status[node.block] = true;
}

/// Best free neighbour per uncovered block (minimum degree, then minimum id).
pub fn build_selectlist(node: &NodeState) -> Vec<Candidate> {
    debug_assert_eq!(node.status, Status::Member);
    merge_candidates(
        node.neighbors
            .iter()
            .filter(|e| e.status == Status::Free && !node.block_status[e.block])
            .map(|e| Candidate {
                node: e.id,
                block: e.block,
                degree: e.degree,
                proposer: node.id,
                proposer_degree: node.degree,
            }),
    )
}

/// Merges the node's own proposals with its children's, keeping one
/// candidate per block.
pub fn aggregate_selectlists(node: &NodeState, child_lists: &[Vec<Candidate>]) -> Vec<Candidate> {
    let own = build_selectlist(node);
    merge_candidates(
        own.into_iter()
            .chain(child_lists.iter().flatten().copied())
            .filter(|c| !node.block_status[c.block]),
    )
}

/// One candidate per block, the lowest by degree, node id, then proposer
/// degree and id. Output is sorted by block.
pub fn merge_candidates(candidates: impl IntoIterator<Item = Candidate>) -> Vec<Candidate> {
    let mut best: BTreeMap<BlockId, Candidate> = BTreeMap::new();
    for c in candidates {
        best.entry(c.block)
            .and_modify(|cur| {
                if c.rank() < cur.rank() {
                    *cur = c;
                }
            })
            .or_insert(c);
    }
    best.into_values().collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LeaderDecision {
    Select(Vec<Message>),
    Terminate(Message),
}

/// The leader's step after the convergecast.
pub fn leader_select(leader: &NodeState, merged: &[Candidate]) -> LeaderDecision {
    debug_assert_eq!(leader.role, Role::Leader);
    let partition = leader.id;
    if leader.all_covered() {
        return LeaderDecision::Terminate(Message::Success {
            partition,
            sender: leader.id,
            flag: 1,
        });
    }
    if merged.is_empty() {
        return LeaderDecision::Terminate(Message::Success {
            partition,
            sender: leader.id,
            flag: 0,
        });
    }
    LeaderDecision::Select(
        merged
            .iter()
            .map(|c| Message::Selected {
                partition,
                sender: c.proposer,
                sender_degree: c.proposer_degree,
                target: c.node,
                block_status: leader.block_status.clone(),
            })
            .collect(),
    )
}

/// A free node picks one offer: minimum sender degree, then smaller
/// partition id, then smaller sender id. Returns the `Confirm` to send.
///
/// Panics if `offers` is empty or contains something other than `Selected`.
pub fn resolve_selected(node: &mut NodeState, offers: &[Message]) -> Message {
    debug_assert_eq!(node.status, Status::Free);
    let (partition, sender, block_status) = offers
        .iter()
        .map(|m| match m {
            Message::Selected {
                partition,
                sender,
                sender_degree,
                block_status,
                ..
            } => ((*sender_degree, *partition, *sender), block_status),
            other => panic!("resolve_selected given {other:?}"),
        })
        .min_by_key(|(key, _)| *key)
        .map(|((_, p, s), bs)| (p, s, bs.clone()))
        .expect("at least one offer");
    node.status = Status::Member;
    node.role = Role::None;
    node.partition = Some(partition);
    node.parent = Some(sender);
    node.block_status = block_status;
    node.block_status[node.block] = true;
    Message::Confirm {
        partition,
        sender: node.id,
    }
}

/// Applies an `Include` at the partition and at every member. Returns
/// whether anything changed, so a duplicate delivery is a no-op.
pub fn apply_include(partition: &mut Partition, nodes: &mut [NodeState], msg: &Message) -> bool {
    let Message::Include { node: j, .. } = *msg else {
        panic!("apply_include given {msg:?}");
    };
    let block = nodes[j].block;
    let mut changed = partition.members.insert(j);
    changed |= partition.covered_blocks.insert(block);
    if let Some(p) = nodes[j].parent {
        changed |= partition.tree_edges.insert((p, j));
    }
    for &m in &partition.members {
        let state = &mut nodes[m];
        if !state.block_status[block] {
            state.block_status[block] = true;
            changed = true;
        }
        for e in state.neighbors.iter_mut().filter(|e| e.id == j) {
            if e.status != Status::Member {
                e.status = Status::Member;
                changed = true;
            }
        }
    }
    partition.complete = partition.covered_blocks.len() == nodes[j].block_status.len();
    changed
}

/// How and when a leader stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Termination {
    pub leader: NodeId,
    pub round: u32,
    pub success: bool,
}

/// Full protocol state of one run.
#[derive(Debug, Clone)]
pub struct World<'a> {
    deployment: &'a Deployment,
    pub nodes: Vec<NodeState>,
    /// Partitions under construction or complete, keyed by founding leader.
    pub partitions: BTreeMap<NodeId, Partition>,
    active: BTreeSet<NodeId>,
    pub round: u32,
    pub trace: Trace,
    /// Live per-node transmission counters, kept apart from the trace.
    pub sent: Vec<usize>,
    pub terminations: Vec<Termination>,
}

impl<'a> World<'a> {
    pub fn new(deployment: &'a Deployment) -> Self {
        Self {
            deployment,
            nodes: initial_states(deployment),
            partitions: BTreeMap::new(),
            active: BTreeSet::new(),
            round: 0,
            trace: Trace::default(),
            sent: vec![0; deployment.node_count()],
            terminations: Vec::new(),
        }
    }

    /// Runs leader election; on success every leader founds a partition.
    pub fn elect(&mut self, l_prob: f64, seed: u64) -> Result<BTreeSet<NodeId>> {
        let leaders = elect_leaders(&mut self.nodes, l_prob, seed)?;
        self.install_leaders(&leaders);
        Ok(leaders)
    }

    /// Installs a fixed leader set, bypassing the random draw.
    pub fn with_leaders(deployment: &'a Deployment, leaders: &BTreeSet<NodeId>) -> Self {
        let mut world = Self::new(deployment);
        for &l in leaders {
            make_leader(&mut world.nodes[l]);
        }
        world.install_leaders(leaders);
        world
    }

    fn install_leaders(&mut self, leaders: &BTreeSet<NodeId>) {
        let blocks = self.deployment.grid.block_count();
        for &l in leaders {
            self.partitions
                .insert(l, Partition::singleton(l, self.nodes[l].block, blocks));
            self.active.insert(l);
        }
    }

    pub fn is_finished(&self) -> bool {
        self.active.is_empty()
    }

    pub fn active_leaders(&self) -> &BTreeSet<NodeId> {
        &self.active
    }

    pub fn total_sent(&self) -> usize {
        self.sent.iter().sum()
    }

    fn transmit(&mut self, sender: NodeId, kind: MessageKind, partition: NodeId) {
        self.sent[sender] += 1;
        self.trace.push(self.round, sender, kind, partition);
    }

    fn depth(&self, mut v: NodeId) -> Vec<NodeId> {
        // Path from v up to (and including) its root.
        let mut path = vec![v];
        while let Some(p) = self.nodes[v].parent {
            path.push(p);
            v = p;
        }
        path
    }

    fn flood(&mut self, pid: NodeId, kind: MessageKind) {
        let forwarders = self.partitions[&pid].forwarders();
        for f in forwarders {
            self.transmit(f, kind, pid);
        }
    }

    /// Post-order convergecast of Selectlists; returns the leader's merged list.
    fn convergecast(&mut self, leader: NodeId) -> Vec<Candidate> {
        let mut order = Vec::new();
        let mut stack = vec![(leader, false)];
        while let Some((v, expanded)) = stack.pop() {
            if expanded {
                order.push(v);
            } else {
                stack.push((v, true));
                for &c in self.nodes[v].children.iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        let mut lists: BTreeMap<NodeId, Vec<Candidate>> = BTreeMap::new();
        for v in order {
            let child_lists: Vec<Vec<Candidate>> = self.nodes[v]
                .children
                .iter()
                .map(|c| lists.remove(c).unwrap_or_default())
                .collect();
            let merged = aggregate_selectlists(&self.nodes[v], &child_lists);
            if v != leader {
                self.transmit(v, MessageKind::Selectlist, leader);
            }
            lists.insert(v, merged);
        }
        lists.remove(&leader).unwrap_or_default()
    }

    fn refresh_neighbor_tables(&mut self) {
        let status: Vec<Status> = self.nodes.iter().map(|n| n.status).collect();
        for node in &mut self.nodes {
            for e in &mut node.neighbors {
                e.status = status[e.id];
            }
        }
    }

    fn terminate(&mut self, leader: NodeId, success: bool) {
        self.flood(leader, MessageKind::Success(u8::from(success)));
        self.active.remove(&leader);
        self.terminations.push(Termination {
            leader,
            round: self.round,
            success,
        });
        if !success {
            let part = self.partitions.remove(&leader).expect("active partition");
            for m in part.members {
                self.nodes[m].reset_to_free();
            }
        }
    }

    /// Executes one complete round for every running partition.
    pub fn step_round(&mut self) {
        if self.is_finished() {
            return;
        }
        self.round += 1;
        self.refresh_neighbor_tables();

        let mut offers: BTreeMap<NodeId, Vec<Message>> = BTreeMap::new();
        for leader in self.active.clone() {
            let merged = self.convergecast(leader);
            match leader_select(&self.nodes[leader], &merged) {
                LeaderDecision::Terminate(Message::Success { flag, .. }) => {
                    self.terminate(leader, flag == 1);
                }
                LeaderDecision::Terminate(other) => unreachable!("{other:?}"),
                LeaderDecision::Select(selected) => {
                    for msg in selected {
                        let Message::Selected { sender, target, .. } = msg else {
                            unreachable!()
                        };
                        // Leader down to the proposer, then one hop to the target.
                        let mut path = self.depth(sender);
                        path.reverse();
                        for hop in path {
                            self.transmit(hop, MessageKind::Selected, leader);
                        }
                        offers.entry(target).or_default().push(msg);
                    }
                }
            }
        }

        let mut joined: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for (target, msgs) in offers {
            let confirm = resolve_selected(&mut self.nodes[target], &msgs);
            let Message::Confirm { partition, .. } = confirm else {
                unreachable!()
            };
            let parent = self.nodes[target].parent.expect("parent set on join");
            self.nodes[parent].children.insert(target);
            // Confirm climbs from the new node to the leader.
            let path = self.depth(target);
            for &hop in &path[..path.len() - 1] {
                self.transmit(hop, MessageKind::Confirm, partition);
            }
            joined.entry(partition).or_default().push(target);
        }

        for (pid, nodes) in joined {
            for j in nodes {
                let include = Message::Include {
                    partition: pid,
                    sender: pid,
                    node: j,
                };
                let part = self.partitions.get_mut(&pid).expect("partition exists");
                apply_include(part, &mut self.nodes, &include);
                self.flood(pid, MessageKind::Include);
            }
            if self.partitions[&pid].complete {
                self.terminate(pid, true);
            }
        }

        for (pid, part) in &self.partitions {
            self.trace.snapshots.push(PartitionSnapshot {
                round: self.round,
                partition: *pid,
                members: part.members.iter().copied().collect(),
            });
        }
    }

    pub fn run(mut self) -> PartitioningOutcome {
        while !self.is_finished() {
            self.step_round();
        }
        self.into_outcome()
    }

    fn into_outcome(self) -> PartitioningOutcome {
        let free = self
            .nodes
            .iter()
            .filter(|n| n.status == Status::Free)
            .map(|n| n.id)
            .collect();
        let messages_sent = self.sent.iter().sum();
        PartitioningOutcome {
            partitions: self
                .partitions
                .into_values()
                .filter(|p| p.complete)
                .collect(),
            free,
            rounds: self.round,
            messages_sent,
            terminations: self.terminations,
            trace: self.trace,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitioningOutcome {
    /// Complete partitions, ordered by id.
    pub partitions: Vec<Partition>,
    pub free: BTreeSet<NodeId>,
    pub rounds: u32,
    /// Engine-side running total of transmissions.
    pub messages_sent: usize,
    pub terminations: Vec<Termination>,
    pub trace: Trace,
}

/// Elects leaders once and runs the protocol to termination.
pub fn run_partitioning(
    deployment: &Deployment,
    l_prob: f64,
    seed: u64,
) -> Result<PartitioningOutcome> {
    let mut world = World::new(deployment);
    world.elect(l_prob, seed)?;
    Ok(world.run())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BlockGrid;
    use crate::oracle::verify_cover;
    use proptest::prelude::*;

    fn grid(rows: usize, cols: usize) -> BlockGrid {
        BlockGrid::new(rows, cols, 1.0).unwrap()
    }

    fn complete_edges(n: usize) -> Vec<(NodeId, NodeId)> {
        (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .collect()
    }

    fn member(
        id: NodeId,
        block: BlockId,
        blocks: usize,
        neighbors: Vec<NeighborEntry>,
    ) -> NodeState {
        let mut block_status = vec![false; blocks];
        block_status[block] = true;
        NodeState {
            id,
            block,
            degree: neighbors.len(),
            status: Status::Member,
            role: Role::Leader,
            partition: Some(id),
            parent: None,
            children: BTreeSet::new(),
            neighbors,
            block_status,
        }
    }

    fn free(id: NodeId, block: BlockId, degree: usize) -> NeighborEntry {
        NeighborEntry {
            id,
            block,
            degree,
            status: Status::Free,
        }
    }

    fn cand(node: NodeId, block: BlockId, degree: usize) -> Candidate {
        Candidate {
            node,
            block,
            degree,
            proposer: 100,
            proposer_degree: 1,
        }
    }

    #[test]
    fn elect_near_one_makes_everyone_leader() {
        let d = Deployment::generate(40, grid(2, 2), 1.0, 1).unwrap();
        let mut nodes = initial_states(&d);
        let leaders = elect_leaders(&mut nodes, 1.0 - 1e-12, 3).unwrap();
        assert_eq!(leaders.len(), 40);
        for n in &nodes {
            assert_eq!(n.role, Role::Leader);
            assert_eq!(n.status, Status::Member);
            assert_eq!(n.parent, None);
            assert_eq!(n.partition, Some(n.id));
        }
    }

    #[test]
    fn elect_is_deterministic_and_validated() {
        let d = Deployment::generate(200, grid(2, 2), 1.0, 1).unwrap();
        let a = elect_leaders(&mut initial_states(&d), 0.1, 17).unwrap();
        let b = elect_leaders(&mut initial_states(&d), 0.1, 17).unwrap();
        assert_eq!(a, b);
        assert!(elect_leaders(&mut initial_states(&d), 0.0, 1).is_err());
        assert!(elect_leaders(&mut initial_states(&d), 1.0, 1).is_err());
    }

    #[test]
    fn elect_count_is_binomial() {
        // Binomial(10000, 0.1): sigma = sqrt(10000 * 0.1 * 0.9) = 30.
        let d = Deployment::from_parts(grid(1, 1), &vec![0; 10_000], &[]);
        let leaders = elect_leaders(&mut initial_states(&d), 0.1, 99).unwrap();
        assert!(
            (leaders.len() as f64 - 1000.0).abs() <= 90.0,
            "{}",
            leaders.len()
        );
    }

    #[test]
    fn elect_reports_zero_leaders() {
        let d = Deployment::from_parts(grid(1, 1), &[0], &[]);
        let mut hit = false;
        for seed in 0..50 {
            if let Err(Error::NoLeaders { .. }) = elect_leaders(&mut initial_states(&d), 1e-9, seed)
            {
                hit = true;
            }
        }
        assert!(hit);
    }

    #[test]
    fn selectlist_empty_when_blocks_covered() {
        let mut node = member(0, 0, 2, vec![free(1, 0, 1), free(2, 1, 2)]);
        node.block_status = vec![true, true];
        assert!(build_selectlist(&node).is_empty());
    }

    #[test]
    fn selectlist_prefers_min_degree() {
        let node = member(0, 0, 2, vec![free(1, 1, 5), free(2, 1, 3)]);
        let list = build_selectlist(&node);
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].node, 2);
        assert_eq!(list[0].degree, 3);
    }

    #[test]
    fn selectlist_tie_goes_to_smaller_id_exhaustively() {
        // All orderings of up to four equal-degree neighbours in one block.
        let ids = [7usize, 3, 9, 4];
        for k in 1..=ids.len() {
            for perm in permutations(&ids[..k]) {
                let node = member(0, 0, 2, perm.iter().map(|&i| free(i, 1, 4)).collect());
                let list = build_selectlist(&node);
                assert_eq!(list[0].node, *ids[..k].iter().min().unwrap());
            }
        }
    }

    fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
        if items.len() <= 1 {
            return vec![items.to_vec()];
        }
        let mut out = Vec::new();
        for i in 0..items.len() {
            let mut rest = items.to_vec();
            let x = rest.remove(i);
            for mut p in permutations(&rest) {
                p.insert(0, x);
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn selectlist_ignores_members() {
        let mut e = free(1, 1, 1);
        e.status = Status::Member;
        let node = member(0, 0, 2, vec![e, free(2, 1, 9)]);
        assert_eq!(build_selectlist(&node)[0].node, 2);
    }

    #[test]
    fn aggregate_pass_through_and_merge() {
        let node = member(0, 0, 3, vec![]);
        let out = aggregate_selectlists(&node, &[vec![cand(5, 1, 2)]]);
        assert_eq!(out, vec![cand(5, 1, 2)]);

        let node = member(0, 0, 3, vec![free(4, 1, 4)]);
        let out = aggregate_selectlists(&node, &[vec![cand(5, 1, 2)]]);
        assert_eq!(out, vec![cand(5, 1, 2)]);

        let node = member(0, 0, 3, vec![]);
        let out = aggregate_selectlists(&node, &[vec![cand(5, 1, 2)], vec![cand(6, 2, 8)]]);
        assert_eq!(out, vec![cand(5, 1, 2), cand(6, 2, 8)]);
    }

    proptest! {
        #[test]
        fn merge_matches_brute_force(raw in proptest::collection::vec((0usize..20, 0usize..4, 0usize..6, 0usize..5, 0usize..4), 0..25)) {
            let cands: Vec<Candidate> = raw.iter().map(|&(node, block, degree, proposer, pd)| Candidate {
                node, block, degree, proposer, proposer_degree: pd,
            }).collect();
            let merged = merge_candidates(cands.clone());
            // Oracle: for every block present, the winner is no worse than any
            // other candidate of that block under the lexicographic order.
            let blocks: BTreeSet<_> = cands.iter().map(|c| c.block).collect();
            prop_assert_eq!(merged.len(), blocks.len());
            for m in &merged {
                for c in cands.iter().filter(|c| c.block == m.block) {
                    prop_assert!((m.degree, m.node, m.proposer_degree, m.proposer)
                        <= (c.degree, c.node, c.proposer_degree, c.proposer));
                }
            }
        }
    }

    #[test]
    fn leader_with_empty_list_fails() {
        let leader = member(0, 0, 2, vec![]);
        assert_eq!(
            leader_select(&leader, &[]),
            LeaderDecision::Terminate(Message::Success {
                partition: 0,
                sender: 0,
                flag: 0
            })
        );
    }

    #[test]
    fn leader_selects_one_per_candidate() {
        let leader = member(0, 0, 4, vec![]);
        let LeaderDecision::Select(msgs) = leader_select(&leader, &[cand(5, 1, 2)]) else {
            panic!()
        };
        assert_eq!(msgs.len(), 1);
        assert!(matches!(msgs[0], Message::Selected { target: 5, .. }));

        let three = [cand(5, 1, 2), cand(6, 2, 2), cand(7, 3, 1)];
        let LeaderDecision::Select(msgs) = leader_select(&leader, &three) else {
            panic!()
        };
        assert_eq!(msgs.len(), 3);
    }

    fn offer(partition: NodeId, sender: NodeId, sender_degree: usize) -> Message {
        Message::Selected {
            partition,
            sender,
            sender_degree,
            target: 50,
            block_status: vec![false, false],
        }
    }

    fn fresh_free(id: NodeId) -> NodeState {
        NodeState {
            id,
            block: 1,
            degree: 3,
            status: Status::Free,
            role: Role::None,
            partition: None,
            parent: None,
            children: BTreeSet::new(),
            neighbors: vec![],
            block_status: vec![false, false],
        }
    }

    #[test]
    fn resolve_single_offer() {
        let mut n = fresh_free(50);
        let c = resolve_selected(&mut n, &[offer(3, 8, 4)]);
        assert_eq!(
            c,
            Message::Confirm {
                partition: 3,
                sender: 50
            }
        );
        assert_eq!(n.status, Status::Member);
        assert_eq!(n.parent, Some(8));
        assert_eq!(n.block_status, vec![false, true]);
    }

    #[test]
    fn resolve_prefers_min_sender_degree() {
        let mut n = fresh_free(50);
        resolve_selected(&mut n, &[offer(20, 21, 7), offer(10, 11, 2)]);
        assert_eq!(n.partition, Some(10));
        let mut n = fresh_free(50);
        resolve_selected(&mut n, &[offer(10, 11, 7), offer(20, 21, 2)]);
        assert_eq!(n.partition, Some(20));
    }

    #[test]
    fn resolve_ties_exhaustive_two_offers() {
        for d in 0..4 {
            for (pa, pb) in [(3, 9), (9, 3), (1, 2), (2, 1)] {
                for (sa, sb) in [(4, 5), (5, 4)] {
                    let mut n = fresh_free(50);
                    resolve_selected(&mut n, &[offer(pa, sa, d), offer(pb, sb, d)]);
                    assert_eq!(n.partition, Some(pa.min(pb)));
                }
            }
        }
        // Same partition offered by two senders with equal degree.
        let mut n = fresh_free(50);
        resolve_selected(&mut n, &[offer(3, 9, 2), offer(3, 4, 2)]);
        assert_eq!(n.parent, Some(4));
    }

    #[test]
    fn include_is_idempotent_and_completes() {
        let d = Deployment::from_parts(grid(1, 2), &[0, 1], &[(0, 1)]);
        let mut nodes = initial_states(&d);
        make_leader(&mut nodes[0]);
        let mut part = Partition::singleton(0, 0, 2);
        nodes[1].status = Status::Member;
        nodes[1].partition = Some(0);
        nodes[1].parent = Some(0);
        nodes[0].children.insert(1);
        let inc = Message::Include {
            partition: 0,
            sender: 0,
            node: 1,
        };
        assert!(apply_include(&mut part, &mut nodes, &inc));
        assert_eq!(part.members, BTreeSet::from([0, 1]));
        assert!(part.complete);
        assert!(nodes[0].all_covered());
        assert_eq!(nodes[0].neighbors[0].status, Status::Member);
        let snapshot = (part.clone(), nodes.clone());
        assert!(!apply_include(&mut part, &mut nodes, &inc));
        assert_eq!((part, nodes), snapshot);
    }

    #[test]
    fn single_block_leader_alone() {
        let d = Deployment::from_parts(grid(1, 1), &[0, 0, 0], &complete_edges(3));
        let out = World::with_leaders(&d, &BTreeSet::from([1])).run();
        assert_eq!(out.partitions.len(), 1);
        assert_eq!(out.partitions[0].members, BTreeSet::from([1]));
        assert_eq!(out.rounds, 1);
        assert_eq!(out.free, BTreeSet::from([0, 2]));
    }

    #[test]
    fn one_node_per_block_clique() {
        let d = Deployment::from_parts(grid(2, 2), &[0, 1, 2, 3], &complete_edges(4));
        let out = World::with_leaders(&d, &BTreeSet::from([2])).run();
        assert_eq!(out.partitions.len(), 1);
        let p = &out.partitions[0];
        assert_eq!(p.members, BTreeSet::from([0, 1, 2, 3]));
        assert!(p.is_well_formed());
        assert!(verify_cover(&p.members, &d).is_valid());
        // The leader sees every block directly: one inclusion round.
        assert_eq!(out.rounds, 1);
    }

    #[test]
    fn unreachable_block_fails() {
        // Block 3 node is isolated.
        let d = Deployment::from_parts(grid(2, 2), &[0, 1, 2, 3], &[(0, 1), (1, 2)]);
        let out = World::with_leaders(&d, &BTreeSet::from([0])).run();
        assert!(out.partitions.is_empty());
        assert_eq!(out.free.len(), 4);
        assert_eq!(out.terminations.len(), 1);
        assert!(!out.terminations[0].success);
    }

    #[test]
    fn path_grows_one_block_per_round() {
        // 0-1-2-3 path across a 1x4 grid.
        let d = Deployment::from_parts(grid(1, 4), &[0, 1, 2, 3], &[(0, 1), (1, 2), (2, 3)]);
        let out = World::with_leaders(&d, &BTreeSet::from([0])).run();
        assert_eq!(out.rounds, 3);
        let p = &out.partitions[0];
        assert_eq!(p.tree_edges, BTreeSet::from([(0, 1), (1, 2), (2, 3)]));
        // Selectlist: rounds 2,3 have 1 and 2 non-leader members.
        // Selected: 1 + 2 + 3 hops. Confirm: 1 + 2 + 3 hops.
        // Include floods: {0} -> 1, {0,1} -> 2, {0,1,2} -> 3. Success(1): 3.
        let count = |k: MessageKind| out.trace.records.iter().filter(|r| r.kind == k).count();
        assert_eq!(count(MessageKind::Selectlist), 3);
        assert_eq!(count(MessageKind::Selected), 6);
        assert_eq!(count(MessageKind::Confirm), 6);
        assert_eq!(count(MessageKind::Include), 6);
        assert_eq!(count(MessageKind::Success(1)), 3);
        assert_eq!(out.messages_sent, out.trace.records.len());
    }

    #[test]
    fn contention_goes_to_lower_degree_sender() {
        // Leaders 0 and 1 (block 0) both offer node 2 (block 1).
        let d = Deployment::from_parts(
            grid(1, 2),
            &[0, 0, 1, 0],
            &[(0, 1), (0, 2), (1, 2), (0, 3), (1, 3)],
        );
        let out = World::with_leaders(&d, &BTreeSet::from([0, 1])).run();
        // degree(0)=3, degree(1)=3: tie broken by smaller partition id.
        assert_eq!(out.partitions.len(), 1);
        assert_eq!(out.partitions[0].id, 0);

        // Without edge 1-3 leader 1 has the lower degree and wins.
        let d =
            Deployment::from_parts(grid(1, 2), &[0, 0, 1, 0], &[(0, 1), (0, 2), (1, 2), (0, 3)]);
        let out = World::with_leaders(&d, &BTreeSet::from([0, 1])).run();
        assert_eq!(out.partitions.len(), 1);
        assert_eq!(out.partitions[0].id, 1);
    }

    #[test]
    fn random_runs_yield_valid_disjoint_covers() {
        for seed in 0..40 {
            let g = BlockGrid::from_ranges(3, 3, 10.0, 10.0).unwrap();
            let d = Deployment::generate(90, g, 10.0, seed).unwrap();
            let out = run_partitioning(&d, 0.05, seed + 1000);
            let Ok(out) = out else { continue };
            let mut seen = BTreeSet::new();
            for p in &out.partitions {
                assert!(p.is_well_formed());
                assert!(verify_cover(&p.members, &d).is_valid());
                for &(a, b) in &p.tree_edges {
                    assert!(d.graph.are_adjacent(a, b));
                }
                for &m in &p.members {
                    assert!(seen.insert(m), "node {m} in two partitions");
                }
            }
            assert!(seen.is_disjoint(&out.free));
            assert_eq!(out.messages_sent, out.trace.records.len());
        }
    }

    #[test]
    fn run_is_deterministic() {
        let g = BlockGrid::from_ranges(4, 4, 10.0, 10.0).unwrap();
        let d = Deployment::generate(160, g, 10.0, 5).unwrap();
        let a = run_partitioning(&d, 0.03, 11).unwrap();
        let b = run_partitioning(&d, 0.03, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn step_round_is_deterministic() {
        let g = BlockGrid::from_ranges(3, 3, 10.0, 10.0).unwrap();
        let d = Deployment::generate(90, g, 10.0, 8).unwrap();
        let mut w = World::new(&d);
        w.elect(0.05, 2).unwrap();
        let mut a = w.clone();
        let mut b = w;
        a.step_round();
        b.step_round();
        assert_eq!(a.nodes, b.nodes);
        assert_eq!(a.partitions, b.partitions);
        assert_eq!(a.trace, b.trace);
    }
}
