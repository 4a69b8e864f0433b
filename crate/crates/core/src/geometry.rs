//! Block grid, random deployment and the communication graph.
//!
//! A block has side `R / √2` with `R = min(sensing, transmission)`, so its
//! diagonal is exactly `R`: a node anywhere in a block senses the whole block
//! and reaches every other node of the same block.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from;
use crate::{BlockId, NodeId};

/// Relative slack on the squared-distance test. Absorbs rounding of
/// `R / √2` so that co-block pairs near opposite corners stay adjacent.
const DISTANCE_SLACK: f64 = 1e-12;

/// Side length of a block for the given ranges.
pub fn block_side(sensing_range: f64, transmission_range: f64) -> Result<f64> {
    for (name, v) in [
        ("sensing_range", sensing_range),
        ("transmission_range", transmission_range),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(name, format!("must be positive, got {v}")));
        }
    }
    Ok(sensing_range.min(transmission_range) / std::f64::consts::SQRT_2)
}

/// The monitored region: `rows × cols` square blocks numbered row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockGrid {
    rows: usize,
    cols: usize,
    block_side: f64,
}

impl BlockGrid {
    pub fn new(rows: usize, cols: usize, block_side: f64) -> Result<Self> {
        if rows == 0 {
            return Err(Error::invalid("rows", "must be at least 1"));
        }
        if cols == 0 {
            return Err(Error::invalid("cols", "must be at least 1"));
        }
        if !(block_side.is_finite() && block_side > 0.0) {
            return Err(Error::invalid(
                "block_side",
                format!("must be positive, got {block_side}"),
            ));
        }
        Ok(Self {
            rows,
            cols,
            block_side,
        })
    }

    /// Grid whose block side is derived from the two radio ranges.
    pub fn from_ranges(
        rows: usize,
        cols: usize,
        sensing_range: f64,
        transmission_range: f64,
    ) -> Result<Self> {
        Self::new(rows, cols, block_side(sensing_range, transmission_range)?)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn block_side(&self) -> f64 {
        self.block_side
    }

    /// Number of blocks `m`.
    pub fn block_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn width(&self) -> f64 {
        self.cols as f64 * self.block_side
    }

    pub fn height(&self) -> f64 {
        self.rows as f64 * self.block_side
    }

    /// Block containing `(x, y)`. Points on an interior boundary belong to the
    /// higher-index block.
    pub fn assign_block(&self, x: f64, y: f64) -> Result<BlockId> {
        if !(x >= 0.0 && x < self.width()) {
            return Err(Error::invalid(
                "x",
                format!("{x} outside [0, {})", self.width()),
            ));
        }
        if !(y >= 0.0 && y < self.height()) {
            return Err(Error::invalid(
                "y",
                format!("{y} outside [0, {})", self.height()),
            ));
        }
        let col = ((x / self.block_side).floor() as usize).min(self.cols - 1);
        let row = ((y / self.block_side).floor() as usize).min(self.rows - 1);
        Ok(row * self.cols + col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodePlacement {
    pub node_id: NodeId,
    pub x: f64,
    pub y: f64,
    pub block_id: BlockId,
}

/// Places `n` nodes independently and uniformly over the region.
pub fn deploy(n: usize, grid: &BlockGrid, seed: u64) -> Result<Vec<NodePlacement>> {
    if n == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    let mut rng = rng_from(seed);
    let (w, h) = (grid.width(), grid.height());
    (0..n)
        .map(|node_id| {
            let x = rng.gen_range(0.0..w);
            let y = rng.gen_range(0.0..h);
            Ok(NodePlacement {
                node_id,
                x,
                y,
                block_id: grid.assign_block(x, y)?,
            })
        })
        .collect()
}

/// Unit-disk communication graph. Node ids index the adjacency directly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeploymentGraph {
    adjacency: Vec<Vec<NodeId>>,
}

impl DeploymentGraph {
    /// Builds a graph from explicit undirected edges. Used for hand-made
    /// instances; duplicate edges and self-loops are dropped.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a != b {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        Self { adjacency }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, node: NodeId) -> &[NodeId] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node].len()
    }

    pub fn are_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Connects every pair of distinct nodes within `transmission_range` (closed ball).
pub fn build_graph(placements: &[NodePlacement], transmission_range: f64) -> DeploymentGraph {
    let limit = transmission_range * transmission_range * (1.0 + DISTANCE_SLACK);
    let mut adjacency = vec![Vec::new(); placements.len()];
    for (i, a) in placements.iter().enumerate() {
        for (j, b) in placements.iter().enumerate().skip(i + 1) {
            let (dx, dy) = (a.x - b.x, a.y - b.y);
            if dx * dx + dy * dy <= limit {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
    }
    DeploymentGraph { adjacency }
}

/// Nodes per block, indexed by block id.
pub fn block_occupancy(placements: &[NodePlacement], grid: &BlockGrid) -> Vec<usize> {
    let mut counts = vec![0; grid.block_count()];
    for p in placements {
        counts[p.block_id] += 1;
    }
    counts
}

/// A deployed network: the grid, node placements and their communication graph.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub grid: BlockGrid,
    pub transmission_range: f64,
    pub placements: Vec<NodePlacement>,
    pub graph: DeploymentGraph,
}

impl Deployment {
    pub fn new(
        grid: BlockGrid,
        transmission_range: f64,
        placements: Vec<NodePlacement>,
    ) -> Result<Self> {
        if placements.is_empty() {
            return Err(Error::invalid("placements", "must not be empty"));
        }
        for (i, p) in placements.iter().enumerate() {
            if p.node_id != i {
                return Err(Error::invalid(
                    "placements",
                    format!(
                        "node ids must be 0..n in order; position {i} has id {}",
                        p.node_id
                    ),
                ));
            }
            if grid.assign_block(p.x, p.y)? != p.block_id {
                return Err(Error::invalid(
                    "placements",
                    format!(
                        "node {i} at ({}, {}) is not in block {}",
                        p.x, p.y, p.block_id
                    ),
                ));
            }
        }
        let graph = build_graph(&placements, transmission_range);
        Ok(Self {
            grid,
            transmission_range,
            placements,
            graph,
        })
    }

    /// Random deployment of `n` nodes.
    pub fn generate(n: usize, grid: BlockGrid, transmission_range: f64, seed: u64) -> Result<Self> {
        let placements = deploy(n, &grid, seed)?;
        Self::new(grid, transmission_range, placements)
    }

    /// Hand-built instance with explicit block assignment and edges. Coordinates
    /// are set to the centre of each node's block.
    pub fn from_parts(grid: BlockGrid, blocks: &[BlockId], edges: &[(NodeId, NodeId)]) -> Self {
        let side = grid.block_side();
        let placements = blocks
            .iter()
            .enumerate()
            .map(|(node_id, &block_id)| NodePlacement {
                node_id,
                x: ((block_id % grid.cols()) as f64 + 0.5) * side,
                y: ((block_id / grid.cols()) as f64 + 0.5) * side,
                block_id,
            })
            .collect();
        Self {
            grid,
            transmission_range: f64::NAN,
            placements,
            graph: DeploymentGraph::from_edges(blocks.len(), edges),
        }
    }

    pub fn node_count(&self) -> usize {
        self.placements.len()
    }

    pub fn block_of(&self, node: NodeId) -> BlockId {
        self.placements[node].block_id
    }

    pub fn occupancy(&self) -> Vec<usize> {
        block_occupancy(&self.placements, &self.grid)
    }

    pub fn to_file(&self) -> DeploymentFile {
        DeploymentFile {
            rows: self.grid.rows(),
            cols: self.grid.cols(),
            block_side: self.grid.block_side(),
            transmission_range: self.transmission_range,
            nodes: self.placements.clone(),
        }
    }
}

/// Serialized form of a [`Deployment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeploymentFile {
    pub rows: usize,
    pub cols: usize,
    pub block_side: f64,
    pub transmission_range: f64,
    pub nodes: Vec<NodePlacement>,
}

impl DeploymentFile {
    pub fn into_deployment(self) -> Result<Deployment> {
        let grid = BlockGrid::new(self.rows, self.cols, self.block_side)?;
        if !(self.transmission_range.is_finite() && self.transmission_range > 0.0) {
            return Err(Error::invalid(
                "transmission_range",
                format!("must be positive, got {}", self.transmission_range),
            ));
        }
        Deployment::new(grid, self.transmission_range, self.nodes)
    }
}
