//! Scenario driver: deployment, partitioning, round-robin activation with
//! energy drain, fault injection and recovery.
//!
//! Energy model: every transmission costs `message_cost`, the partition that
//! monitors during an epoch pays `active_cost_per_epoch` per member, idle
//! nodes pay nothing. A member whose residual energy cannot pay for another
//! epoch fails. Faults are processed one node at a time, smallest id first.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fault::{recover, FaultEvent, RecoveryOutcome};
use crate::geometry::{BlockGrid, Deployment};
use crate::metrics::{
    self, max_partitions_upper_bound, partition_diameter, tree_depth, RecoveryRecord,
    RecoveryVerdict, Trace,
};
use crate::protocol::{check_l_prob, Partition, PartitioningOutcome, World};
use crate::rng::{derive_seed, STREAM_DEPLOY, STREAM_LEADERS, STREAM_TRIAL};
use crate::NodeId;

/// Leader draws attempted before a trial gives up.
pub const MAX_ELECTIONS: usize = 64;

/// Comparison slack for energy bookkeeping.
const ENERGY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub initial_energy: f64,
    pub active_cost_per_epoch: f64,
    pub message_cost: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            initial_energy: 100.0,
            active_cost_per_epoch: 1.0,
            message_cost: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub rows: usize,
    pub cols: usize,
    pub sensing_range: f64,
    pub transmission_range: f64,
    pub n: usize,
    pub l_prob: f64,
    pub seed: u64,
    pub trials: usize,
    pub energy: EnergyModel,
    pub recovery_enabled: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 {
            return Err(Error::invalid("rows", "must be at least 1"));
        }
        if self.cols == 0 {
            return Err(Error::invalid("cols", "must be at least 1"));
        }
        if self.n == 0 {
            return Err(Error::invalid("n", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        check_l_prob(self.l_prob)?;
        self.grid()?;
        let e = &self.energy;
        if !(e.initial_energy.is_finite() && e.initial_energy > 0.0) {
            return Err(Error::invalid("initial_energy", "must be positive"));
        }
        if !(e.active_cost_per_epoch.is_finite() && e.active_cost_per_epoch > 0.0) {
            return Err(Error::invalid("active_cost_per_epoch", "must be positive"));
        }
        if !(e.message_cost.is_finite() && e.message_cost >= 0.0) {
            return Err(Error::invalid("message_cost", "must be non-negative"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<BlockGrid> {
        BlockGrid::from_ranges(
            self.rows,
            self.cols,
            self.sensing_range,
            self.transmission_range,
        )
    }

    pub fn grid_label(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }

    pub fn trial_seed(&self, trial: usize) -> u64 {
        derive_seed(self.seed, STREAM_TRIAL, trial as u64)
    }
}

/// Deploys and partitions one trial, re-drawing leaders with fresh derived
/// seeds while none emerges.
pub fn partition_trial(
    config: &SimConfig,
    trial: usize,
) -> Result<(Deployment, PartitioningOutcome)> {
    let seed = config.trial_seed(trial);
    let deployment = Deployment::generate(
        config.n,
        config.grid()?,
        config.transmission_range,
        derive_seed(seed, STREAM_DEPLOY, 0),
    )?;
    for attempt in 0..MAX_ELECTIONS {
        let mut world = World::new(&deployment);
        match world.elect(
            config.l_prob,
            derive_seed(seed, STREAM_LEADERS, attempt as u64),
        ) {
            Ok(_) => {
                let outcome = world.run();
                return Ok((deployment, outcome));
            }
            Err(Error::NoLeaders { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoLeaders {
        attempts: MAX_ELECTIONS,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveryStats {
    pub attempts: usize,
    pub successes: usize,
    pub recruited: usize,
}

/// What happened to a partition after one injected fault.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FaultResolution {
    Recovered {
        partition: NodeId,
        recruited: BTreeSet<NodeId>,
    },
    RecoveryFailed {
        partition: NodeId,
    },
    Retired {
        partition: NodeId,
    },
}

/// Post-partitioning network state for lifetime simulation.
#[derive(Debug, Clone)]
pub struct Network<'a> {
    deployment: &'a Deployment,
    pub partitions: Vec<Partition>,
    pub retired: Vec<bool>,
    pub free: BTreeSet<NodeId>,
    pub energy: Vec<f64>,
    pub dead: BTreeSet<NodeId>,
    model: EnergyModel,
    recovery_enabled: bool,
    pub stats: RecoveryStats,
    pub records: Vec<RecoveryRecord>,
    pub epoch: u64,
}

impl<'a> Network<'a> {
    /// Starting state after partitioning; partitioning transmissions are
    /// charged to their senders.
    pub fn new(
        deployment: &'a Deployment,
        outcome: &PartitioningOutcome,
        model: EnergyModel,
        recovery_enabled: bool,
    ) -> Self {
        let mut energy = vec![model.initial_energy; deployment.node_count()];
        for r in &outcome.trace.records {
            energy[r.sender] = (energy[r.sender] - model.message_cost).max(0.0);
        }
        Self {
            deployment,
            partitions: outcome.partitions.clone(),
            retired: vec![false; outcome.partitions.len()],
            free: outcome.free.clone(),
            energy,
            dead: BTreeSet::new(),
            model,
            recovery_enabled,
            stats: RecoveryStats::default(),
            records: Vec::new(),
            epoch: 0,
        }
    }

    pub fn operational(&self) -> usize {
        self.retired.iter().filter(|r| !**r).count()
    }

    fn partition_index_of(&self, node: NodeId) -> Option<usize> {
        (0..self.partitions.len())
            .find(|&i| !self.retired[i] && self.partitions[i].members.contains(&node))
    }

    fn charge(&mut self, sender: NodeId) {
        self.energy[sender] = (self.energy[sender] - self.model.message_cost).max(0.0);
    }

    /// Fails `node`, a live member of an operational partition, and resolves
    /// the fault by recovery or retirement.
    pub fn inject_fault(&mut self, event: FaultEvent) -> Result<FaultResolution> {
        let f = event.node;
        if self.dead.contains(&f) {
            return Err(Error::invalid("node", format!("node {f} is already dead")));
        }
        let Some(idx) = self.partition_index_of(f) else {
            return Err(Error::invalid(
                "node",
                format!("node {f} is not a member of an operational partition"),
            ));
        };
        self.dead.insert(f);
        let pid = self.partitions[idx].id;

        if !self.recovery_enabled {
            self.retired[idx] = true;
            self.records.push(RecoveryRecord {
                time: event.time,
                partition: pid,
                failed: f,
                outcome: RecoveryVerdict::Retired,
                recruited: Vec::new(),
                messages: 0,
            });
            return Ok(FaultResolution::Retired { partition: pid });
        }

        self.stats.attempts += 1;
        let report = recover(&self.partitions[idx], f, &self.free, self.deployment)?;
        let messages = report.transmissions.len();
        match report.outcome {
            RecoveryOutcome::Recovered {
                partition,
                recruited,
            } => {
                for &(sender, _) in &report.transmissions {
                    self.charge(sender);
                }
                self.stats.successes += 1;
                self.stats.recruited += recruited.len();
                for r in &recruited {
                    self.free.remove(r);
                }
                self.partitions[idx] = partition;
                self.records.push(RecoveryRecord {
                    time: event.time,
                    partition: pid,
                    failed: f,
                    outcome: RecoveryVerdict::Recovered,
                    recruited: recruited.iter().copied().collect(),
                    messages,
                });
                Ok(FaultResolution::Recovered {
                    partition: pid,
                    recruited,
                })
            }
            RecoveryOutcome::Failed(_) => {
                // Only the retiring partition pays; free nodes stay untouched.
                let members = self.partitions[idx].members.clone();
                for &(sender, _) in &report.transmissions {
                    if members.contains(&sender) {
                        self.charge(sender);
                    }
                }
                self.retired[idx] = true;
                self.records.push(RecoveryRecord {
                    time: event.time,
                    partition: pid,
                    failed: f,
                    outcome: RecoveryVerdict::Failed,
                    recruited: Vec::new(),
                    messages,
                });
                Ok(FaultResolution::RecoveryFailed { partition: pid })
            }
        }
    }

    fn exhausted_member(&self, idx: usize) -> Option<NodeId> {
        let threshold = self.model.active_cost_per_epoch - ENERGY_EPS;
        self.partitions[idx]
            .members
            .iter()
            .copied()
            .find(|&m| self.energy[m] < threshold)
    }

    fn fail_exhausted(&mut self, idx: usize) {
        while !self.retired[idx] {
            let Some(f) = self.exhausted_member(idx) else {
                return;
            };
            self.inject_fault(FaultEvent {
                node: f,
                time: self.epoch,
            })
            .expect("exhausted node is a live member");
        }
    }

    /// Round-robin activation until no partition is operational. Returns the
    /// number of epochs in which some partition monitored the region.
    pub fn run_lifetime(&mut self) -> u64 {
        let k = self.partitions.len();
        let mut cursor = 0;
        while self.operational() > 0 {
            let idx = (0..k)
                .map(|o| (cursor + o) % k)
                .find(|&i| !self.retired[i])
                .expect("an operational partition exists");
            cursor = idx + 1;
            self.fail_exhausted(idx);
            if self.retired[idx] {
                continue;
            }
            self.epoch += 1;
            let cost = self.model.active_cost_per_epoch;
            for &m in &self.partitions[idx].members {
                self.energy[m] = (self.energy[m] - cost).max(0.0);
            }
            self.fail_exhausted(idx);
        }
        self.epoch
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeOutcome {
    pub epochs: u64,
    pub stats: RecoveryStats,
    pub records: Vec<RecoveryRecord>,
}

/// Lifetime of one partitioned deployment under the given recovery setting.
pub fn run_lifetime(
    deployment: &Deployment,
    outcome: &PartitioningOutcome,
    model: EnergyModel,
    recovery_enabled: bool,
) -> LifetimeOutcome {
    let mut net = Network::new(deployment, outcome, model, recovery_enabled);
    let epochs = net.run_lifetime();
    LifetimeOutcome {
        epochs,
        stats: net.stats,
        records: net.records,
    }
}

/// Per-trial metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub grid: String,
    pub n: usize,
    pub l_prob: f64,
    pub partitions_found: usize,
    pub upper_bound: usize,
    pub rounds: u32,
    pub avg_msgs_per_node: f64,
    pub diameter_mean: Option<f64>,
    pub diameter_max: Option<usize>,
    pub lifetime_no_recovery: u64,
    pub lifetime_with_recovery: u64,
    pub leaders: usize,
    pub tree_depth_max: Option<usize>,
    pub recovery_attempts: usize,
    pub recovery_successes: usize,
    pub recruited: usize,
}

impl TrialReport {
    pub fn improvement_ratio(&self) -> Option<f64> {
        (self.lifetime_no_recovery > 0)
            .then(|| self.lifetime_with_recovery as f64 / self.lifetime_no_recovery as f64)
    }
}

/// Everything one trial produced.
#[derive(Debug, Clone)]
pub struct TrialRun {
    pub report: TrialReport,
    pub deployment: Deployment,
    pub partitioning: PartitioningOutcome,
    /// Partitioning trace plus recovery records of the recovery-enabled run.
    pub trace: Trace,
    /// Engine-side transmission total, independent of the trace.
    pub live_messages: usize,
}

pub fn run_trial(config: &SimConfig, trial: usize) -> Result<TrialRun> {
    let (deployment, outcome) = partition_trial(config, trial)?;
    let graph = &deployment.graph;
    let diameters = outcome
        .partitions
        .iter()
        .map(|p| partition_diameter(&p.members, graph))
        .collect::<Result<Vec<_>>>()?;
    let depth_max = outcome
        .partitions
        .iter()
        .map(|p| tree_depth(p.leader, &p.tree_edges))
        .max();

    let without = run_lifetime(&deployment, &outcome, config.energy, false);
    let with = if config.recovery_enabled {
        run_lifetime(&deployment, &outcome, config.energy, true)
    } else {
        without.clone()
    };
    let (stats, records) = if config.recovery_enabled {
        (with.stats, with.records.clone())
    } else {
        (RecoveryStats::default(), Vec::new())
    };

    let report = TrialReport {
        trial,
        grid: config.grid_label(),
        n: config.n,
        l_prob: config.l_prob,
        partitions_found: outcome.partitions.len(),
        upper_bound: max_partitions_upper_bound(&deployment.occupancy()),
        rounds: metrics::rounds_to_complete(&outcome.trace),
        avg_msgs_per_node: metrics::messages_per_node(&outcome.trace, config.n),
        diameter_mean: (!diameters.is_empty())
            .then(|| diameters.iter().sum::<usize>() as f64 / diameters.len() as f64),
        diameter_max: diameters.iter().copied().max(),
        lifetime_no_recovery: without.epochs,
        lifetime_with_recovery: with.epochs,
        leaders: outcome.terminations.len(),
        tree_depth_max: depth_max,
        recovery_attempts: stats.attempts,
        recovery_successes: stats.successes,
        recruited: stats.recruited,
    };
    let mut trace = outcome.trace.clone();
    trace.recoveries = records;
    Ok(TrialRun {
        report,
        live_messages: outcome.messages_sent,
        deployment,
        partitioning: outcome,
        trace,
    })
}

/// Means over trials. Diameter means skip trials without partitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub grid: String,
    pub blocks: usize,
    pub n: usize,
    pub l_prob: f64,
    pub trials: usize,
    pub mean_partitions: f64,
    pub mean_upper_bound: f64,
    pub mean_rounds: f64,
    pub max_rounds: u32,
    pub mean_msgs_per_node: f64,
    pub mean_diameter: Option<f64>,
    pub mean_lifetime_no_recovery: f64,
    pub mean_lifetime_with_recovery: f64,
    pub lifetime_improvement: Option<f64>,
}

pub fn summarize(config: &SimConfig, trials: &[TrialReport]) -> Summary {
    let k = trials.len().max(1) as f64;
    let mean = |f: &dyn Fn(&TrialReport) -> f64| trials.iter().map(f).sum::<f64>() / k;
    let diameters: Vec<f64> = trials.iter().filter_map(|t| t.diameter_mean).collect();
    let no = mean(&|t| t.lifetime_no_recovery as f64);
    let with = mean(&|t| t.lifetime_with_recovery as f64);
    Summary {
        grid: config.grid_label(),
        blocks: config.rows * config.cols,
        n: config.n,
        l_prob: config.l_prob,
        trials: trials.len(),
        mean_partitions: mean(&|t| t.partitions_found as f64),
        mean_upper_bound: mean(&|t| t.upper_bound as f64),
        mean_rounds: mean(&|t| t.rounds as f64),
        max_rounds: trials.iter().map(|t| t.rounds).max().unwrap_or(0),
        mean_msgs_per_node: mean(&|t| t.avg_msgs_per_node),
        mean_diameter: (!diameters.is_empty())
            .then(|| diameters.iter().sum::<f64>() / diameters.len() as f64),
        mean_lifetime_no_recovery: no,
        mean_lifetime_with_recovery: with,
        lifetime_improvement: (no > 0.0).then(|| with / no - 1.0),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub config: SimConfig,
    pub summary: Summary,
    pub trials: Vec<TrialReport>,
}

/// Runs every trial, in parallel, returning them in trial order.
pub fn run_trials(config: &SimConfig) -> Result<Vec<TrialRun>> {
    config.validate()?;
    (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, t))
        .collect()
}

pub fn run_scenario(config: &SimConfig) -> Result<(ScenarioReport, Vec<Trace>)> {
    let runs = run_trials(config)?;
    let (trials, traces): (Vec<_>, Vec<_>) = runs.into_iter().map(|r| (r.report, r.trace)).unzip();
    Ok((
        ScenarioReport {
            config: config.clone(),
            summary: summarize(config, &trials),
            trials,
        },
        traces,
    ))
}
