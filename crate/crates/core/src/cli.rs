//! Command-line front end: `partition`, `sweep`, `lifetime` and `verify`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure
//! (I/O, unreadable input files, failed verification).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::engine::{self, EnergyModel, SimConfig, Summary, TrialReport, TrialRun};
use crate::error::Error;
use crate::geometry::DeploymentFile;
use crate::metrics::Trace;
use crate::oracle::verify_cover;
use crate::protocol::Partition;
use crate::NodeId;

pub const DEFAULT_RANGE: f64 = 10.0;
pub const DEFAULT_L_PROB: f64 = 0.05;
pub const DEFAULT_NODES_PER_BLOCK: usize = 10;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_TRIALS: usize = 10;

#[derive(Debug, Parser)]
#[command(
    name = "sensor-cover",
    version,
    about = "Connected set cover partitioning of sensor deployments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deploy, partition and report per-trial metrics.
    Partition(RunArgs),
    /// Aggregate metrics over a range of square grids at fixed density.
    Sweep(SweepArgs),
    /// Paired round-robin lifetimes with and without fault recovery.
    Lifetime(RunArgs),
    /// Check exported partitions against a deployment.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let (r, c) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected RxC, got {s:?}"))?;
    let rows: usize = r
        .trim()
        .parse()
        .map_err(|_| format!("bad row count in {s:?}"))?;
    let cols: usize = c
        .trim()
        .parse()
        .map_err(|_| format!("bad column count in {s:?}"))?;
    if rows == 0 || cols == 0 {
        return Err(format!("grid {s:?} has no blocks"));
    }
    Ok(Grid { rows, cols })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridList(pub Vec<Grid>);

fn parse_grid_list(s: &str) -> Result<GridList, String> {
    parse_grids(s).map(GridList)
}

/// `KxK..LxL` for every square size from K to L, or a comma list of grids.
pub fn parse_grids(s: &str) -> Result<Vec<Grid>, String> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (parse_grid(a)?, parse_grid(b)?);
        if a.rows != a.cols || b.rows != b.cols {
            return Err(format!("range endpoints must be square grids, got {s:?}"));
        }
        let grids: Vec<Grid> = (a.rows..=b.rows)
            .map(|k| Grid { rows: k, cols: k })
            .collect();
        if grids.is_empty() {
            return Err(format!("grid range {s:?} is empty"));
        }
        return Ok(grids);
    }
    let grids = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(parse_grid)
        .collect::<Result<Vec<_>, _>>()?;
    if grids.is_empty() {
        return Err("no grids given".to_string());
    }
    Ok(grids)
}

/// `E0:cost` or `E0:cost:msgcost`.
pub fn parse_energy(s: &str) -> Result<EnergyModel, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if !(2..=3).contains(&parts.len()) {
        return Err(format!("expected E0:cost[:msgcost], got {s:?}"));
    }
    let num = |p: &str| -> Result<f64, String> {
        p.trim()
            .parse()
            .map_err(|_| format!("bad number {p:?} in {s:?}"))
    };
    Ok(EnergyModel {
        initial_energy: num(parts[0])?,
        active_cost_per_epoch: num(parts[1])?,
        message_cost: parts.get(2).map(|p| num(p)).transpose()?.unwrap_or(0.0),
    })
}

fn parse_on_off(s: &str) -> Result<bool, String> {
    match s {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => Err(format!("expected on or off, got {s:?}")),
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ScenarioArgs {
    /// Flat TOML scenario file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<Grid>,
    #[arg(long, conflicts_with = "nodes_per_block")]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub nodes_per_block: Option<usize>,
    /// Sensing range S.
    #[arg(long)]
    pub srange: Option<f64>,
    /// Transmission range T.
    #[arg(long)]
    pub trange: Option<f64>,
    /// Leader self-election probability.
    #[arg(long, conflicts_with = "target_leaders")]
    pub lprob: Option<f64>,
    /// Expected number of leaders; sets the probability to L / n.
    #[arg(long)]
    pub target_leaders: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_parser = parse_on_off)]
    pub recovery: Option<bool>,
    /// E0:cost[:msgcost] energy units.
    #[arg(long, value_parser = parse_energy)]
    pub energy: Option<EnergyModel>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Report destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write per-trial message traces as JSON.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Write trial_{i}_deployment.json and trial_{i}_partitions.json here.
    #[arg(long)]
    pub export_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// `2x2..7x7` or a comma list such as `2x2,3x4`.
    #[arg(long, value_parser = parse_grid_list, default_value = "2x2..7x7")]
    pub grids: GridList,
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub partitions: PathBuf,
    #[arg(long)]
    pub deployment: PathBuf,
}

/// Scenario file keys; every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub n: Option<usize>,
    pub nodes_per_block: Option<usize>,
    pub sensing_range: Option<f64>,
    pub transmission_range: Option<f64>,
    pub l_prob: Option<f64>,
    pub target_leaders: Option<f64>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub initial_energy: Option<f64>,
    pub active_cost_per_epoch: Option<f64>,
    pub message_cost: Option<f64>,
    pub recovery_enabled: Option<bool>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Density {
    Nodes(usize),
    PerBlock(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Leaders {
    Prob(f64),
    Target(f64),
}

/// Flags merged over the scenario file, grid still open.
#[derive(Debug, Clone, PartialEq)]
struct Scenario {
    grid: Option<Grid>,
    density: Option<Density>,
    leaders: Leaders,
    sensing_range: f64,
    transmission_range: f64,
    seed: u64,
    trials: usize,
    energy: EnergyModel,
    recovery: bool,
}

impl Scenario {
    fn resolve(args: &ScenarioArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
                toml::from_str::<ScenarioFile>(&text)
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
            }
            None => ScenarioFile::default(),
        };

        let file_grid = match (file.rows, file.cols) {
            (Some(rows), Some(cols)) => Some(Grid { rows, cols }),
            (None, None) => None,
            _ => {
                return Err(CliError::Usage(
                    "scenario file must set both rows and cols".to_string(),
                ))
            }
        };
        let file_density = match (file.n, file.nodes_per_block) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage(
                    "scenario file sets both n and nodes_per_block".to_string(),
                ))
            }
            (Some(n), None) => Some(Density::Nodes(n)),
            (None, Some(d)) => Some(Density::PerBlock(d)),
            (None, None) => None,
        };
        let file_leaders = match (file.l_prob, file.target_leaders) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage(
                    "scenario file sets both l_prob and target_leaders".to_string(),
                ))
            }
            (Some(p), None) => Some(Leaders::Prob(p)),
            (None, Some(l)) => Some(Leaders::Target(l)),
            (None, None) => None,
        };
        let base_energy = EnergyModel {
            initial_energy: file
                .initial_energy
                .unwrap_or(EnergyModel::default().initial_energy),
            active_cost_per_epoch: file
                .active_cost_per_epoch
                .unwrap_or(EnergyModel::default().active_cost_per_epoch),
            message_cost: file.message_cost.unwrap_or(0.0),
        };

        let density = match (args.nodes, args.nodes_per_block) {
            (Some(n), _) => Some(Density::Nodes(n)),
            (None, Some(d)) => Some(Density::PerBlock(d)),
            (None, None) => file_density,
        };
        let leaders = match (args.lprob, args.target_leaders) {
            (Some(p), _) => Leaders::Prob(p),
            (None, Some(l)) => Leaders::Target(l),
            (None, None) => file_leaders.unwrap_or(Leaders::Prob(DEFAULT_L_PROB)),
        };
        Ok(Scenario {
            grid: args.grid.or(file_grid),
            density,
            leaders,
            sensing_range: args.srange.or(file.sensing_range).unwrap_or(DEFAULT_RANGE),
            transmission_range: args
                .trange
                .or(file.transmission_range)
                .unwrap_or(DEFAULT_RANGE),
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            trials: args.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS),
            energy: args.energy.unwrap_or(base_energy),
            recovery: args.recovery.or(file.recovery_enabled).unwrap_or(true),
        })
    }

    fn config_for(&self, grid: Grid) -> Result<SimConfig, CliError> {
        let n = match self.density {
            Some(Density::Nodes(n)) => n,
            Some(Density::PerBlock(d)) => d * grid.rows * grid.cols,
            None => {
                return Err(CliError::Usage(
                    "missing --nodes or --nodes-per-block".to_string(),
                ))
            }
        };
        let l_prob = match self.leaders {
            Leaders::Prob(p) => p,
            Leaders::Target(l) => {
                if !(l.is_finite() && l > 0.0) {
                    return Err(CliError::Usage(
                        "invalid value for target_leaders: must be positive".to_string(),
                    ));
                }
                l / n.max(1) as f64
            }
        };
        let config = SimConfig {
            rows: grid.rows,
            cols: grid.cols,
            sensing_range: self.sensing_range,
            transmission_range: self.transmission_range,
            n,
            l_prob,
            seed: self.seed,
            trials: self.trials,
            energy: self.energy,
            recovery_enabled: self.recovery,
        };
        config.validate()?;
        Ok(config)
    }

    fn single_config(&self) -> Result<SimConfig, CliError> {
        let grid = self
            .grid
            .ok_or_else(|| CliError::Usage("missing --grid".to_string()))?;
        self.config_for(grid)
    }
}

/// One row of the lifetime report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifetimeRow {
    pub trial: usize,
    pub grid: String,
    pub n: usize,
    pub l_prob: f64,
    pub partitions_found: usize,
    pub upper_bound: usize,
    pub lifetime_no_recovery: u64,
    pub lifetime_with_recovery: u64,
    pub improvement_ratio: Option<f64>,
    pub recovery_attempts: usize,
    pub recovery_successes: usize,
    pub recruited: usize,
}

impl From<&TrialReport> for LifetimeRow {
    fn from(t: &TrialReport) -> Self {
        Self {
            trial: t.trial,
            grid: t.grid.clone(),
            n: t.n,
            l_prob: t.l_prob,
            partitions_found: t.partitions_found,
            upper_bound: t.upper_bound,
            lifetime_no_recovery: t.lifetime_no_recovery,
            lifetime_with_recovery: t.lifetime_with_recovery,
            improvement_ratio: t.improvement_ratio(),
            recovery_attempts: t.recovery_attempts,
            recovery_successes: t.recovery_successes,
            recruited: t.recruited,
        }
    }
}

#[derive(Debug, Serialize)]
struct LifetimeReport<'a> {
    config: &'a SimConfig,
    summary: &'a Summary,
    trials: Vec<LifetimeRow>,
}

#[derive(Debug, Serialize)]
struct TrialTrace<'a> {
    trial: usize,
    trace: &'a Trace,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PartitionsFile {
    pub partitions: Vec<Partition>,
}

/// What `verify` needs from a partitions file; other fields are ignored.
#[derive(Debug, Deserialize)]
struct VerifyInput {
    partitions: Vec<VerifyEntry>,
}

#[derive(Debug, Deserialize)]
struct VerifyEntry {
    id: Option<NodeId>,
    members: std::collections::BTreeSet<NodeId>,
}

fn csv_string<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn json_string<T: Serialize + ?Sized>(value: &T) -> Result<String, CliError> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn emit(out: Option<&Path>, contents: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, contents),
        None => stdout
            .write_all(contents.as_bytes())
            .map_err(|e| CliError::Runtime(format!("stdout: {e}"))),
    }
}

fn write_extras(runs: &[TrialRun], output: &OutputArgs) -> Result<(), CliError> {
    if let Some(path) = &output.trace {
        let traces: Vec<TrialTrace> = runs
            .iter()
            .map(|r| TrialTrace {
                trial: r.report.trial,
                trace: &r.trace,
            })
            .collect();
        write_file(path, &json_string(&traces)?)?;
    }
    if let Some(dir) = &output.export_dir {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        for r in runs {
            let i = r.report.trial;
            write_file(
                &dir.join(format!("trial_{i}_deployment.json")),
                &json_string(&r.deployment.to_file())?,
            )?;
            let parts = PartitionsFile {
                partitions: r.partitioning.partitions.clone(),
            };
            write_file(
                &dir.join(format!("trial_{i}_partitions.json")),
                &json_string(&parts)?,
            )?;
        }
    }
    Ok(())
}

fn note(out: Option<&Path>, line: &str, stdout: &mut dyn Write) {
    if out.is_some() {
        let _ = writeln!(stdout, "{line}");
    }
}

fn cmd_partition(args: &RunArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = Scenario::resolve(&args.scenario)?.single_config()?;
    let runs = engine::run_trials(&config)?;
    let trials: Vec<TrialReport> = runs.iter().map(|r| r.report.clone()).collect();
    let summary = engine::summarize(&config, &trials);
    let out = args.output.out.as_deref();
    let body = match args.output.format {
        Format::Csv => csv_string(&trials)?,
        Format::Json => json_string(&engine::ScenarioReport {
            config: config.clone(),
            summary: summary.clone(),
            trials,
        })?,
    };
    emit(out, &body, stdout)?;
    write_extras(&runs, &args.output)?;
    note(
        out,
        &format!(
            "{} trials on {}: mean partitions {:.3}, mean rounds {:.3}",
            summary.trials, summary.grid, summary.mean_partitions, summary.mean_rounds
        ),
        stdout,
    );
    Ok(())
}

fn cmd_lifetime(args: &RunArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let config = Scenario::resolve(&args.scenario)?.single_config()?;
    let runs = engine::run_trials(&config)?;
    let trials: Vec<TrialReport> = runs.iter().map(|r| r.report.clone()).collect();
    let summary = engine::summarize(&config, &trials);
    let rows: Vec<LifetimeRow> = trials.iter().map(LifetimeRow::from).collect();
    let out = args.output.out.as_deref();
    let body = match args.output.format {
        Format::Csv => csv_string(&rows)?,
        Format::Json => json_string(&LifetimeReport {
            config: &config,
            summary: &summary,
            trials: rows,
        })?,
    };
    emit(out, &body, stdout)?;
    write_extras(&runs, &args.output)?;
    let improvement = summary
        .lifetime_improvement
        .map_or("n/a".to_string(), |x| format!("{:.1}%", 100.0 * x));
    note(
        out,
        &format!(
            "{} trials on {}: mean lifetime {:.2} without recovery, {:.2} with, improvement {}",
            summary.trials,
            summary.grid,
            summary.mean_lifetime_no_recovery,
            summary.mean_lifetime_with_recovery,
            improvement
        ),
        stdout,
    );
    Ok(())
}

fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut scenario = Scenario::resolve(&args.scenario)?;
    if scenario.grid.is_some() {
        return Err(CliError::Usage(
            "sweep takes --grids, not --grid or rows/cols".to_string(),
        ));
    }
    match scenario.density {
        Some(Density::Nodes(_)) => {
            return Err(CliError::Usage(
                "sweep scales nodes with blocks; use --nodes-per-block".to_string(),
            ))
        }
        Some(Density::PerBlock(_)) => {}
        None => scenario.density = Some(Density::PerBlock(DEFAULT_NODES_PER_BLOCK)),
    }
    let mut rows = Vec::with_capacity(args.grids.0.len());
    for &grid in &args.grids.0 {
        let config = scenario.config_for(grid)?;
        let (report, _) = engine::run_scenario(&config)?;
        rows.push(report.summary);
    }
    let body = match args.format {
        Format::Csv => csv_string(&rows)?,
        Format::Json => json_string(&rows)?,
    };
    emit(args.out.as_deref(), &body, stdout)?;
    note(
        args.out.as_deref(),
        &format!("{} grid sizes", rows.len()),
        stdout,
    );
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

fn cmd_verify(
    args: &VerifyArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let deployment = read_json::<DeploymentFile>(&args.deployment)?
        .into_deployment()
        .map_err(|e| io_err(&args.deployment, e))?;
    let input: VerifyInput = read_json(&args.partitions)?;
    let w = |stdout: &mut dyn Write, line: String| {
        writeln!(stdout, "{line}").map_err(|e| CliError::Runtime(format!("stdout: {e}")))
    };
    if input.partitions.is_empty() {
        let _ = writeln!(stderr, "warning: no partitions to verify");
        return w(stdout, "0 partitions, nothing to check".to_string());
    }

    let mut failed = 0;
    let mut owner: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    for (idx, entry) in input.partitions.iter().enumerate() {
        let id = entry.id.unwrap_or(idx);
        let check = verify_cover(&entry.members, &deployment);
        if check.is_valid() {
            w(
                stdout,
                format!("partition {id}: ok ({} members)", entry.members.len()),
            )?;
        } else {
            failed += 1;
            w(stdout, format!("partition {id}: FAIL {check}"))?;
        }
        for &v in &entry.members {
            if let Some(prev) = owner.insert(v, id) {
                failed += 1;
                w(
                    stdout,
                    format!("node {v}: FAIL shared by partitions {prev} and {id}"),
                )?;
            }
        }
    }
    let total = input.partitions.len();
    if failed > 0 {
        return Err(CliError::Runtime(format!(
            "verification failed: {failed} problem(s) across {total} partition(s)"
        )));
    }
    w(stdout, format!("{total} partitions valid and disjoint"))
}

pub fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Partition(a) => cmd_partition(a, stdout),
        Command::Sweep(a) => cmd_sweep(a, stdout),
        Command::Lifetime(a) => cmd_lifetime(a, stdout),
        Command::Verify(a) => cmd_verify(a, stdout, stderr),
    }
}

/// Parses `args` (program name first) and runs the command. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    1
                }
            };
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
