//! Scenario driver: seeded graphs, both protocols on the same graph, suite
//! aggregation and output files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{FuzzyConfig, FuzzyEngine};
use crate::link_model::{drift, DriftSpec, PropagationParams, RandomSource, StreamId};
use crate::metrics::{IterationRecord, ScenarioResult};
use crate::protocols::{
    flbra_route, flbra_setup, rbf_route, simulate_delivery, DeliveryOutcome, FlbraController,
    NetworkStatus, ProtocolConfig, SetupOutcome, TraceLine,
};
use crate::topology::{build_grid, populate_links, NetworkGraph, Scenario};

/// Stream epoch reserved for per-packet delivery trials.
const PACKET_EPOCH: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftConfig {
    /// Network checks to run.
    pub checks: usize,
    pub spec: DriftSpec,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self {
            checks: 10,
            spec: DriftSpec {
                rssi_jitter: 3.0,
                per_jitter: 0.05,
                ..Default::default()
            },
        }
    }
}

/// Everything a run needs. Loaded from TOML; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub iterations: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub trace: bool,
    pub monte_carlo_delivery: bool,
    /// Write one edge list per simulated graph.
    pub dump_graphs: bool,
    pub scenarios: Vec<Scenario>,
    pub propagation: PropagationParams,
    pub fuzzy: FuzzyConfig,
    pub protocol: ProtocolConfig,
    pub drift: Option<DriftConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            master_seed: 42,
            output_dir: PathBuf::from("results"),
            trace: false,
            monte_carlo_delivery: false,
            dump_graphs: false,
            scenarios: Scenario::reference_suite(),
            propagation: PropagationParams::default(),
            fuzzy: FuzzyConfig::default(),
            protocol: ProtocolConfig::default(),
            drift: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("RunConfig serializes to TOML")
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be >= 1".into()));
        }
        if self.scenarios.is_empty() {
            return Err(Error::Config("scenario list is empty".into()));
        }
        for (i, s) in self.scenarios.iter().enumerate() {
            s.validate()?;
            if self.scenarios[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::Config(format!("duplicate scenario name {}", s.name)));
            }
        }
        self.propagation.validate()?;
        self.protocol.validate()?;
        if let Some(d) = &self.drift {
            d.spec.validate()?;
        }
        FuzzyEngine::new(&self.fuzzy)?;
        Ok(())
    }

    /// Position of a scenario in the configured list, which is also its
    /// random-stream index.
    pub fn scenario_index(&self, name: &str) -> Result<usize> {
        self.scenarios
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::Config(format!("unknown scenario {name}")))
    }

    fn stream(&self, scenario: usize, iteration: usize, epoch: u32) -> RandomSource {
        RandomSource::new(self.master_seed).with_stream(StreamId {
            scenario: scenario as u32,
            iteration: iteration as u32,
            epoch,
            link: 0,
        })
    }

    fn round_budget(&self, g: &NetworkGraph) -> usize {
        self.protocol.round_budget.unwrap_or(g.node_count())
    }
}

/// The seeded graph of one iteration, before any protocol runs.
pub fn iteration_graph(cfg: &RunConfig, scenario: usize, iteration: usize) -> Result<NetworkGraph> {
    let s = cfg
        .scenarios
        .get(scenario)
        .ok_or_else(|| Error::Config(format!("no scenario at index {scenario}")))?;
    let mut g = build_grid(s)?;
    populate_links(
        &mut g,
        &cfg.propagation,
        &cfg.stream(scenario, iteration, 0),
    )?;
    Ok(g)
}

fn attach_costs(g: &mut NetworkGraph, setup: &SetupOutcome) {
    for (&(s, d), &c) in &setup.path_info {
        g.set_cost(s, d, c);
    }
}

#[derive(Debug, Clone)]
pub struct IterationRun {
    pub record: IterationRecord,
    pub setup_rounds: usize,
    pub trace: Vec<TraceLine>,
    /// Edge list with FLBRA costs, when graph dumps are enabled.
    pub edge_list: Option<String>,
}

/// One iteration: a fresh graph, FLBRA and RBF on that same graph, and the
/// per-node comparison.
pub fn run_iteration(
    cfg: &RunConfig,
    engine: &FuzzyEngine,
    scenario: usize,
    iteration: usize,
) -> Result<IterationRun> {
    let name = &cfg.scenarios[scenario].name;
    let ctx = |e: Error| e.context(format!("{name} iteration {iteration}"));
    let mut g = iteration_graph(cfg, scenario, iteration).map_err(ctx)?;
    let sensors: Vec<_> = g.sensors().collect();
    let checksum = g.checksum();

    let setup = flbra_setup(&g, engine, cfg.round_budget(&g)).map_err(ctx)?;
    let flbra = sensors
        .iter()
        .map(|&n| flbra_route(&setup.table, &g, n))
        .collect::<Result<Vec<_>>>()
        .map_err(ctx)?;

    if g.checksum() != checksum {
        return Err(ctx(Error::Consistency(
            "graph changed between protocol runs".into(),
        )));
    }
    let rbf = sensors
        .iter()
        .map(|&n| rbf_route(&g, n))
        .collect::<Result<Vec<_>>>()
        .map_err(ctx)?;

    let record = if cfg.monte_carlo_delivery {
        let packets = cfg.protocol.packets;
        let trials = |outcomes: &[DeliveryOutcome], lane: u64| -> Result<Vec<f64>> {
            outcomes
                .iter()
                .map(|o| {
                    let src = cfg
                        .stream(scenario, iteration, PACKET_EPOCH)
                        .with_link(lane * g.node_count() as u64 + u64::from(o.source.0));
                    simulate_delivery(o, &g, packets, &mut src.rng())
                })
                .collect()
        };
        let (sf, sr) = (
            trials(&flbra, 0).map_err(ctx)?,
            trials(&rbf, 1).map_err(ctx)?,
        );
        IterationRecord::with_success(iteration, &flbra, &rbf, sf, sr)
    } else {
        IterationRecord::new(iteration, &flbra, &rbf)
    }
    .map_err(ctx)?;

    let edge_list = cfg.dump_graphs.then(|| {
        attach_costs(&mut g, &setup);
        g.edge_list()
    });
    Ok(IterationRun {
        record,
        setup_rounds: setup.rounds,
        trace: setup.trace,
        edge_list,
    })
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub result: ScenarioResult,
    /// Per iteration, in order.
    pub traces: Vec<Vec<TraceLine>>,
    pub edge_lists: Vec<Option<String>>,
}

/// Runs every iteration of every configured scenario. Iterations run in
/// parallel; results do not depend on scheduling.
pub fn run_suite(cfg: &RunConfig) -> Result<Vec<ScenarioRun>> {
    let all: Vec<usize> = (0..cfg.scenarios.len()).collect();
    run_scenarios(cfg, &all)
}

/// Runs a subset of the configured scenarios, addressed by list position so
/// their random streams match a full-suite run.
pub fn run_scenarios(cfg: &RunConfig, scenarios: &[usize]) -> Result<Vec<ScenarioRun>> {
    cfg.validate()?;
    if scenarios.is_empty() {
        return Err(Error::Config("no scenarios selected".into()));
    }
    let engine = FuzzyEngine::new(&cfg.fuzzy)?;
    scenarios
        .iter()
        .map(|&si| {
            if si >= cfg.scenarios.len() {
                return Err(Error::Config(format!("no scenario at index {si}")));
            }
            run_scenario(cfg, &engine, si)
        })
        .collect()
}

pub fn run_scenario(cfg: &RunConfig, engine: &FuzzyEngine, scenario: usize) -> Result<ScenarioRun> {
    let runs = (0..cfg.iterations)
        .into_par_iter()
        .map(|i| run_iteration(cfg, engine, scenario, i))
        .collect::<Result<Vec<_>>>()?;
    let mut traces = Vec::with_capacity(runs.len());
    let mut edge_lists = Vec::with_capacity(runs.len());
    let mut records = Vec::with_capacity(runs.len());
    for r in runs {
        traces.push(r.trace);
        edge_lists.push(r.edge_list);
        records.push(r.record);
    }
    Ok(ScenarioRun {
        result: ScenarioResult::aggregate(cfg.scenarios[scenario].name.clone(), records)?,
        traces,
        edge_lists,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"))
}

/// Fixed-width summary table for the terminal.
pub fn format_summary(results: &[ScenarioResult]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<8} {:>9} {:>9} {:>9} {:>8} {:>8} {:>8} {:>8} {:>6}",
        "scenario", "FM", "theta1", "theta2", "hops_F", "hops_R", "far_F", "far_R", "voids"
    );
    for r in results {
        let _ = writeln!(
            s,
            "{:<8} {:>9.5} {:>9} {:>9} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>6}{}",
            r.scenario,
            r.fm,
            r.theta1().map_or("NA".into(), |v| format!("{v:.5}")),
            r.theta2().map_or("NA".into(), |v| format!("{v:.5}")),
            r.avg_hops_flbra,
            r.avg_hops_rbf,
            r.farthest_flbra,
            r.farthest_rbf,
            r.void_count_rbf,
            if r.ci.is_none() {
                "  (single iteration: no interval)"
            } else {
                ""
            },
        );
    }
    s
}

/// `scenario,fm,theta1,theta2,avg_hops_flbra,avg_hops_rbf,farthest_flbra,farthest_rbf,void_count_rbf`
pub fn summary_csv(results: &[ScenarioResult]) -> String {
    let mut s = String::from(
        "scenario,fm,theta1,theta2,avg_hops_flbra,avg_hops_rbf,farthest_flbra,farthest_rbf,void_count_rbf\n",
    );
    for r in results {
        let _ = writeln!(
            s,
            "{},{:.6},{},{},{:.6},{:.6},{:.6},{:.6},{}",
            r.scenario,
            r.fm,
            opt(r.theta1()),
            opt(r.theta2()),
            r.avg_hops_flbra,
            r.avg_hops_rbf,
            r.farthest_flbra,
            r.farthest_rbf,
            r.void_count_rbf
        );
    }
    s
}

/// One row per (scenario, iteration).
pub fn iterations_csv(results: &[ScenarioResult]) -> String {
    let mut s = String::from(
        "scenario,iteration,f,avg_hops_flbra,avg_hops_rbf,farthest_flbra,farthest_rbf,voids_flbra,voids_rbf\n",
    );
    for r in results {
        for it in &r.iterations {
            let h = it.hops;
            let u = |v: Option<usize>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
            let _ = writeln!(
                s,
                "{},{},{:.9},{},{},{},{},{},{}",
                r.scenario,
                it.iteration,
                it.f,
                opt(h.flbra.avg),
                opt(h.rbf.avg),
                u(h.flbra.farthest),
                u(h.rbf.farthest),
                h.flbra.voids,
                h.rbf.voids
            );
        }
    }
    s
}

/// Long format: one row per (scenario, iteration, node, protocol). Voids
/// have an empty hop count.
pub fn nodes_csv(results: &[ScenarioResult]) -> String {
    let mut s = String::from("scenario,iteration,node,protocol,success,hops\n");
    for r in results {
        for it in &r.iterations {
            for (proto, succ, hops) in [
                ("flbra", &it.s_flbra, &it.hops_flbra),
                ("rbf", &it.s_rbf, &it.hops_rbf),
            ] {
                for ((node, sv), h) in it.nodes.iter().zip(succ).zip(hops) {
                    let h = h.map(|h| h.to_string()).unwrap_or_default();
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{:.9},{}",
                        r.scenario, it.iteration, node, proto, sv, h
                    );
                }
            }
        }
    }
    s
}

fn write_file(path: PathBuf, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes the result tables (plus traces and graph dumps when enabled) to
/// `cfg.output_dir`. Returns the files written.
pub fn emit_outputs(runs: &[ScenarioRun], cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    if runs.is_empty() {
        return Err(Error::Input("no scenario results to write".into()));
    }
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let results: Vec<ScenarioResult> = runs.iter().map(|r| r.result.clone()).collect();
    let mut written = Vec::new();
    write_file(
        dir.join("summary.csv"),
        &summary_csv(&results),
        &mut written,
    )?;
    write_file(
        dir.join("iterations.csv"),
        &iterations_csv(&results),
        &mut written,
    )?;
    write_file(dir.join("nodes.csv"), &nodes_csv(&results), &mut written)?;

    if cfg.trace {
        let tdir = dir.join("traces");
        fs::create_dir_all(&tdir).map_err(|e| Error::io(&tdir, e))?;
        for run in runs {
            let mut text = String::new();
            for (i, lines) in run.traces.iter().enumerate() {
                let _ = writeln!(text, "# iteration {i}");
                for l in lines {
                    let _ = writeln!(text, "{l}");
                }
            }
            write_file(
                tdir.join(format!("{}.log", run.result.scenario)),
                &text,
                &mut written,
            )?;
        }
    }
    if cfg.dump_graphs {
        let gdir = dir.join("graphs");
        fs::create_dir_all(&gdir).map_err(|e| Error::io(&gdir, e))?;
        for run in runs {
            for (i, edges) in run.edge_lists.iter().enumerate() {
                if let Some(edges) = edges {
                    let name = format!("{}_iter{i:03}.csv", run.result.scenario);
                    write_file(gdir.join(name), edges, &mut written)?;
                }
            }
        }
    }
    Ok(written)
}

/// Edge list of one seeded graph, with the FLBRA costs of all discovered links.
pub fn dump_graph(cfg: &RunConfig, scenario: usize, iteration: usize) -> Result<String> {
    let engine = FuzzyEngine::new(&cfg.fuzzy)?;
    let mut g = iteration_graph(cfg, scenario, iteration)?;
    let setup = flbra_setup(&g, &engine, cfg.round_budget(&g))?;
    attach_costs(&mut g, &setup);
    Ok(g.edge_list())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftCheck {
    pub check: usize,
    pub status: NetworkStatus,
    pub route_changes: usize,
    pub mean_success_flbra: f64,
    pub mean_success_rbf: f64,
}

#[derive(Debug, Clone)]
pub struct DriftReport {
    pub scenario: String,
    pub checks: Vec<DriftCheck>,
    pub trace: Vec<TraceLine>,
}

impl DriftReport {
    pub fn faults(&self) -> usize {
        self.checks
            .iter()
            .filter(|c| c.status == NetworkStatus::Faulty)
            .count()
    }

    /// `check,status,route_changes,mean_success_flbra,mean_success_rbf`
    pub fn to_csv(&self) -> String {
        let mut s =
            String::from("check,status,route_changes,mean_success_flbra,mean_success_rbf\n");
        for c in &self.checks {
            let status = match c.status {
                NetworkStatus::Operational => "operational",
                NetworkStatus::Faulty => "faulty",
            };
            let _ = writeln!(
                s,
                "{},{},{},{:.9},{:.9}",
                c.check, status, c.route_changes, c.mean_success_flbra, c.mean_success_rbf
            );
        }
        s
    }
}

/// Operation-phase experiment: after setup, every check interval the link
/// qualities are re-drawn around the initial survey and the controller runs
/// its network check.
pub fn run_drift(cfg: &RunConfig, scenario: usize, iteration: usize) -> Result<DriftReport> {
    cfg.validate()?;
    let drift_cfg = cfg.drift.clone().unwrap_or_default();
    let engine = FuzzyEngine::new(&cfg.fuzzy)?;
    let base = iteration_graph(cfg, scenario, iteration)?;
    let mut ctl = FlbraController::start(&base, &engine, cfg.protocol.clone())?;
    let mut checks = Vec::with_capacity(drift_cfg.checks);

    for check in 1..=drift_cfg.checks {
        let stream = cfg.stream(scenario, iteration, check as u32);
        let mut g = base.clone();
        for (s, d, q) in base.links() {
            let moved = drift(
                q,
                &drift_cfg.spec,
                cfg.propagation.sensitivity,
                &stream.with_link(base.link_index(s, d) as u64),
            );
            g.set_link(s, d, moved);
        }
        let before = ctl.table().clone();
        let mut status = None;
        while status.is_none() {
            status = ctl.operation_round(&g)?;
        }
        let sensors: Vec<_> = g.sensors().collect();
        let n = sensors.len() as f64;
        let mut sf = 0.0;
        let mut sr = 0.0;
        for &node in &sensors {
            sf += flbra_route(ctl.table(), &g, node)?.end_to_end_success;
            sr += rbf_route(&g, node)?.end_to_end_success;
        }
        checks.push(DriftCheck {
            check,
            status: status.expect("loop exits with a status"),
            route_changes: ctl.table().changes_from(&before),
            mean_success_flbra: sf / n,
            mean_success_rbf: sr / n,
        });
    }
    Ok(DriftReport {
        scenario: cfg.scenarios[scenario].name.clone(),
        checks,
        trace: ctl.trace().to_vec(),
    })
}
