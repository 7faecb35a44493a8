//! FLBRA setup/operation state machines and the RSSI-greedy (RBF) baseline.
//!
//! The base station's timed broadcast/wait cycles are modelled as synchronous
//! rounds. In each setup round every node that can be heard by an already
//! discovered node (or directly by the sink, in the first round) joins, the
//! fuzzy cost of every known link is evaluated and routes are rebuilt.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{CrispCost, FuzzyEngine};
use crate::topology::{dijkstra_routes_within, NetworkGraph, NodeId, RoutingTable};

/// Per receiver (discovered sensors and the sink), the links it hears from
/// discovered senders.
pub type Readings = BTreeMap<NodeId, Vec<(NodeId, crate::link_model::LinkQuality)>>;

/// Fuzzy cost of every link known to the base station.
pub type PathInfo = BTreeMap<(NodeId, NodeId), CrispCost>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    /// Operation rounds between two network checks.
    pub check_interval: usize,
    /// Absolute tolerance when comparing crisp costs across checks.
    pub cost_tolerance: f64,
    /// Maximum discovery rounds; `None` allows one per node.
    pub round_budget: Option<usize>,
    /// Packets per source in per-packet delivery mode.
    pub packets: usize,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            check_interval: 10,
            cost_tolerance: 1e-9,
            round_budget: None,
            packets: 1000,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.check_interval == 0 {
            return Err(Error::Config("check_interval must be >= 1".into()));
        }
        if !(self.cost_tolerance >= 0.0 && self.cost_tolerance.is_finite()) {
            return Err(Error::Config(
                "cost_tolerance must be finite and >= 0".into(),
            ));
        }
        if self.packets == 0 {
            return Err(Error::Config("packets must be >= 1".into()));
        }
        Ok(())
    }

    fn budget_for(&self, g: &NetworkGraph) -> usize {
        self.round_budget.unwrap_or(g.node_count())
    }
}

/// What the base station has learned about the network.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NetInfo {
    pub readings: Readings,
    pub discovered: BTreeSet<NodeId>,
    /// Heard of, not yet queried.
    pub frontier: BTreeSet<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Setup,
    Operational,
    Faulty,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Setup => "setup",
            Phase::Operational => "operational",
            Phase::Faulty => "faulty",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NetworkStatus {
    Operational,
    Faulty,
}

/// One line of the protocol trace.
///
/// Rendered as `round=<n> phase=<setup|operational|faulty> discovered=<n>
/// faults=<n> route_changes=<n>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceLine {
    pub round: usize,
    pub phase: Phase,
    pub discovered: usize,
    pub faults: usize,
    pub route_changes: usize,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "round={} phase={} discovered={} faults={} route_changes={}",
            self.round, self.phase, self.discovered, self.faults, self.route_changes
        )
    }
}

#[derive(Debug, Clone)]
pub struct SetupOutcome {
    pub table: RoutingTable,
    pub net_info: NetInfo,
    pub path_info: PathInfo,
    /// Discovery rounds that added at least one node.
    pub rounds: usize,
    pub trace: Vec<TraceLine>,
}

fn hears_any(g: &NetworkGraph, n: NodeId, receivers: &BTreeSet<NodeId>) -> bool {
    g.out_links(n)
        .any(|(dst, _)| dst == g.sink() || receivers.contains(&dst))
}

fn frontier_of(g: &NetworkGraph, discovered: &BTreeSet<NodeId>) -> BTreeSet<NodeId> {
    g.sensors()
        .filter(|n| !discovered.contains(n) && hears_any(g, *n, discovered))
        .collect()
}

/// Links among `discovered ∪ {sink}` with their fuzzy costs, reusing `cache`.
fn collect_path_info(
    g: &NetworkGraph,
    discovered: &BTreeSet<NodeId>,
    engine: &FuzzyEngine,
    cache: &mut BTreeMap<(NodeId, NodeId), CrispCost>,
) -> Result<(PathInfo, Readings)> {
    let mut info = PathInfo::new();
    let mut readings: BTreeMap<NodeId, Vec<_>> = BTreeMap::new();
    for &src in discovered {
        for (dst, q) in g.out_links(src) {
            if dst != g.sink() && !discovered.contains(&dst) {
                continue;
            }
            let cost = match cache.get(&(src, dst)) {
                Some(c) => *c,
                None => {
                    let c = engine
                        .link_cost(q)
                        .map_err(|e| e.context(format!("link {src}->{dst}")))?;
                    cache.insert((src, dst), c);
                    c
                }
            };
            info.insert((src, dst), cost);
            readings.entry(dst).or_default().push((src, *q));
        }
    }
    Ok((info, readings))
}

fn route_table(g: &NetworkGraph, discovered: &BTreeSet<NodeId>, info: &PathInfo) -> RoutingTable {
    dijkstra_routes_within(g, discovered, |s, d| info.get(&(s, d)).map(|c| c.value()))
}

/// Runs the discovery loop until a round adds no node.
///
/// Returns [`Error::SetupIncomplete`] with the partial table if `max_rounds`
/// rounds were not enough.
pub fn flbra_setup(
    g: &NetworkGraph,
    engine: &FuzzyEngine,
    max_rounds: usize,
) -> Result<SetupOutcome> {
    let mut discovered = BTreeSet::new();
    let mut frontier = frontier_of(g, &discovered);
    let mut cache = BTreeMap::new();
    let mut table = route_table(g, &discovered, &PathInfo::new());
    let mut path_info = PathInfo::new();
    let mut readings = BTreeMap::new();
    let mut trace = Vec::new();
    let mut rounds = 0;

    while !frontier.is_empty() {
        if rounds == max_rounds {
            return Err(Error::SetupIncomplete {
                rounds,
                frontier: frontier.len(),
                partial: Box::new(table),
            });
        }
        discovered.extend(frontier.iter().copied());
        rounds += 1;
        (path_info, readings) = collect_path_info(g, &discovered, engine, &mut cache)?;
        let next = route_table(g, &discovered, &path_info);
        trace.push(TraceLine {
            round: rounds,
            phase: Phase::Setup,
            discovered: discovered.len(),
            faults: 0,
            route_changes: next.changes_from(&table),
        });
        table = next;
        frontier = frontier_of(g, &discovered);
    }

    Ok(SetupOutcome {
        table,
        net_info: NetInfo {
            readings,
            discovered,
            frontier,
        },
        path_info,
        rounds,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolState {
    pub phase: Phase,
    pub routing_table: RoutingTable,
    /// Operation rounds left before the next network check.
    pub check_timer: usize,
    pub path_info: PathInfo,
    pub net_info: NetInfo,
}

/// Why a network check failed, if it did.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckReport {
    pub new_sensors: BTreeSet<NodeId>,
    /// Links whose cost moved beyond tolerance, appeared or vanished.
    pub changed_links: BTreeSet<(NodeId, NodeId)>,
}

impl CheckReport {
    pub fn status(&self) -> NetworkStatus {
        if self.new_sensors.is_empty() && self.changed_links.is_empty() {
            NetworkStatus::Operational
        } else {
            NetworkStatus::Faulty
        }
    }
}

/// Re-surveys the discovered part of `g` and compares it with what the
/// routing table was built from.
pub fn inspect_network(
    state: &ProtocolState,
    g: &NetworkGraph,
    engine: &FuzzyEngine,
    tolerance: f64,
) -> Result<CheckReport> {
    let discovered = &state.net_info.discovered;
    let new_sensors = frontier_of(g, discovered);
    let (fresh, _) = collect_path_info(g, discovered, engine, &mut BTreeMap::new())?;

    let mut changed_links = BTreeSet::new();
    for (k, c) in &fresh {
        match state.path_info.get(k) {
            Some(old) if (old.value() - c.value()).abs() <= tolerance => {}
            _ => {
                changed_links.insert(*k);
            }
        }
    }
    changed_links.extend(state.path_info.keys().filter(|k| !fresh.contains_key(k)));
    Ok(CheckReport {
        new_sensors,
        changed_links,
    })
}

/// The periodic check of the operation phase.
pub fn flbra_network_check(
    state: &ProtocolState,
    g: &NetworkGraph,
    engine: &FuzzyEngine,
    tolerance: f64,
) -> Result<NetworkStatus> {
    Ok(inspect_network(state, g, engine, tolerance)?.status())
}

/// FLBRA base-station controller: setup, then operation rounds with a network
/// check every `check_interval` rounds and a fresh setup whenever the check
/// reports a fault.
#[derive(Debug, Clone)]
pub struct FlbraController<'e> {
    engine: &'e FuzzyEngine,
    cfg: ProtocolConfig,
    state: ProtocolState,
    trace: Vec<TraceLine>,
    round: usize,
    faults: usize,
}

impl<'e> FlbraController<'e> {
    pub fn start(g: &NetworkGraph, engine: &'e FuzzyEngine, cfg: ProtocolConfig) -> Result<Self> {
        let setup = flbra_setup(g, engine, cfg.budget_for(g))?;
        let state = ProtocolState {
            phase: Phase::Operational,
            routing_table: setup.table,
            check_timer: cfg.check_interval,
            path_info: setup.path_info,
            net_info: setup.net_info,
        };
        Ok(Self {
            engine,
            round: setup.rounds,
            trace: setup.trace,
            cfg,
            state,
            faults: 0,
        })
    }

    pub fn state(&self) -> &ProtocolState {
        &self.state
    }

    pub fn table(&self) -> &RoutingTable {
        &self.state.routing_table
    }

    pub fn trace(&self) -> &[TraceLine] {
        &self.trace
    }

    pub fn faults(&self) -> usize {
        self.faults
    }

    /// Runs a network check now, re-running setup on a fault. Resets the
    /// check timer either way.
    pub fn check(&mut self, g: &NetworkGraph) -> Result<NetworkStatus> {
        let report = inspect_network(&self.state, g, self.engine, self.cfg.cost_tolerance)?;
        let status = report.status();
        self.round += 1;
        let mut changes = 0;
        if status == NetworkStatus::Faulty {
            self.faults += 1;
            self.state.phase = Phase::Faulty;
            self.trace.push(self.line(Phase::Faulty, 0));
            let setup = flbra_setup(g, self.engine, self.cfg.budget_for(g))?;
            changes = setup.table.changes_from(&self.state.routing_table);
            self.state.routing_table = setup.table;
            self.state.path_info = setup.path_info;
            self.state.net_info = setup.net_info;
            self.state.phase = Phase::Operational;
        }
        self.state.check_timer = self.cfg.check_interval;
        self.trace.push(self.line(Phase::Operational, changes));
        Ok(status)
    }

    fn line(&self, phase: Phase, route_changes: usize) -> TraceLine {
        TraceLine {
            round: self.round,
            phase,
            discovered: self.state.net_info.discovered.len(),
            faults: self.faults,
            route_changes,
        }
    }

    /// One operation round. Returns the check result when the timer expired
    /// during this round.
    pub fn operation_round(&mut self, g: &NetworkGraph) -> Result<Option<NetworkStatus>> {
        self.state.check_timer = self.state.check_timer.saturating_sub(1);
        if self.state.check_timer == 0 {
            self.check(g).map(Some)
        } else {
            Ok(None)
        }
    }
}

/// Route of one source and its analytic end-to-end delivery probability.
#[derive(Debug, Clone, PartialEq)]
pub struct DeliveryOutcome {
    pub source: NodeId,
    pub delivered: bool,
    /// Links traversed.
    pub hops: usize,
    pub path: Vec<NodeId>,
    pub end_to_end_success: f64,
}

impl DeliveryOutcome {
    pub fn is_void(&self) -> bool {
        !self.delivered
    }
}

/// Scores a path: the product of per-link delivery rates, or 0 if the path
/// stops short of the sink.
pub fn evaluate_delivery(path: &[NodeId], g: &NetworkGraph) -> Result<DeliveryOutcome> {
    let Some(&source) = path.first() else {
        return Err(Error::Consistency("empty path".into()));
    };
    let mut success = 1.0;
    for w in path.windows(2) {
        let q = g.link(w[0], w[1]).ok_or_else(|| {
            Error::Consistency(format!("path uses missing link {}->{}", w[0], w[1]))
        })?;
        success *= 1.0 - q.per;
    }
    let delivered = path.last() == Some(&g.sink());
    Ok(DeliveryOutcome {
        source,
        delivered,
        hops: path.len() - 1,
        path: path.to_vec(),
        end_to_end_success: if delivered { success } else { 0.0 },
    })
}

/// Delivery along the FLBRA routing table. Unrouted sources are voids.
pub fn flbra_route(
    table: &RoutingTable,
    g: &NetworkGraph,
    source: NodeId,
) -> Result<DeliveryOutcome> {
    match table.full_path(source) {
        Some(path) => evaluate_delivery(&path, g),
        None => evaluate_delivery(&[source], g),
    }
}

/// RSSI of the sink beacon at `n`; `-inf` if the beacon is not heard.
pub fn sink_rssi(g: &NetworkGraph, n: NodeId) -> f64 {
    if n == g.sink() {
        return f64::INFINITY;
    }
    g.link(g.sink(), n)
        .map_or(f64::NEG_INFINITY, |q| q.mean_rssi)
}

/// Greedy RSSI-based forwarding.
///
/// Each hop goes to the reachable neighbour with the strongest sink beacon,
/// provided it is strictly stronger than the current node's. A node with no
/// such neighbour sends straight to the sink if it can, otherwise the packet
/// is stuck in a void.
pub fn rbf_route(g: &NetworkGraph, source: NodeId) -> Result<DeliveryOutcome> {
    let sink = g.sink();
    let mut path = vec![source];
    let mut cur = source;
    while cur != sink {
        let here = sink_rssi(g, cur);
        let best = g
            .out_links(cur)
            .filter(|&(n, _)| n != sink)
            .map(|(n, _)| (n, sink_rssi(g, n)))
            .filter(|&(_, r)| r > here)
            .reduce(|a, b| if b.1 > a.1 { b } else { a });
        match best {
            Some((n, _)) => cur = n,
            None if g.link(cur, sink).is_some() => cur = sink,
            None => break,
        }
        path.push(cur);
        if path.len() > g.node_count() {
            return Err(Error::Consistency(format!(
                "RBF walk from {source} did not terminate"
            )));
        }
    }
    evaluate_delivery(&path, g)
}

/// Fraction of `packets` that survive every hop, drawing one Bernoulli trial
/// per packet per link.
pub fn simulate_delivery<R: Rng>(
    outcome: &DeliveryOutcome,
    g: &NetworkGraph,
    packets: usize,
    rng: &mut R,
) -> Result<f64> {
    if !outcome.delivered || packets == 0 {
        return Ok(0.0);
    }
    let pers = outcome
        .path
        .windows(2)
        .map(|w| {
            g.link(w[0], w[1])
                .map(|q| q.per)
                .ok_or_else(|| Error::Consistency(format!("missing link {}->{}", w[0], w[1])))
        })
        .collect::<Result<Vec<f64>>>()?;
    let ok = (0..packets)
        .filter(|_| pers.iter().all(|&p| rng.random::<f64>() >= p))
        .count();
    Ok(ok as f64 / packets as f64)
}
