//! Grid scenarios, the directed link graph and minimum-cost routes to the sink.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::CrispCost;
use crate::link_model::{sample_link, LinkQuality, PropagationParams, RandomSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

fn default_spacing() -> f64 {
    3.0
}

/// A square room filled with sensors on a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    /// Sensors, not counting the sink.
    pub node_count: usize,
    /// m²
    pub area: f64,
    /// m
    #[serde(default = "default_spacing")]
    pub spacing: f64,
}

impl Scenario {
    pub fn new(name: impl Into<String>, node_count: usize, area: f64) -> Self {
        Self {
            name: name.into(),
            node_count,
            area,
            spacing: default_spacing(),
        }
    }

    /// The six reference scenarios, S01 to S06.
    pub fn reference_suite() -> Vec<Scenario> {
        [
            ("S01", 8, 36.0),
            ("S02", 24, 144.0),
            ("S03", 48, 324.0),
            ("S04", 80, 576.0),
            ("S05", 120, 900.0),
            ("S06", 160, 1296.0),
        ]
        .into_iter()
        .map(|(n, c, a)| Scenario::new(n, c, a))
        .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_count == 0 {
            return Err(Error::Scenario(format!(
                "{}: node_count must be > 0",
                self.name
            )));
        }
        if !(self.area > 0.0 && self.area.is_finite()) {
            return Err(Error::Scenario(format!("{}: area must be > 0", self.name)));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::Scenario(format!(
                "{}: spacing must be > 0",
                self.name
            )));
        }
        Ok(())
    }

    /// Grid points per side: `sqrt(area) / spacing + 1`.
    pub fn grid_side(&self) -> usize {
        ((self.area.sqrt() / self.spacing) + 1e-9).floor() as usize + 1
    }
}

/// Node positions plus the directed links that are above sensitivity.
///
/// Links and costs are kept in dense `n × n` tables indexed by
/// `src * n + dst`, which is also the link's random stream index.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    positions: Vec<(f64, f64)>,
    sink: NodeId,
    links: Vec<Option<LinkQuality>>,
    costs: Vec<Option<CrispCost>>,
}

impl NetworkGraph {
    /// Graph with the given positions and no links.
    pub fn new(positions: Vec<(f64, f64)>, sink: NodeId) -> Result<Self> {
        if sink.index() >= positions.len() {
            return Err(Error::Geometry(format!("sink {sink} is not a node")));
        }
        for (i, a) in positions.iter().enumerate() {
            if !(a.0.is_finite() && a.1.is_finite()) {
                return Err(Error::Geometry(format!(
                    "node {i} has a non-finite position"
                )));
            }
            if positions[..i].contains(a) {
                return Err(Error::Geometry(format!("node {i} duplicates a position")));
            }
        }
        let n = positions.len();
        Ok(Self {
            positions,
            sink,
            links: vec![None; n * n],
            costs: vec![None; n * n],
        })
    }

    /// All nodes, sink included.
    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn sink(&self) -> NodeId {
        self.sink
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.positions.len() as u32).map(NodeId)
    }

    pub fn sensors(&self) -> impl Iterator<Item = NodeId> + '_ {
        let sink = self.sink;
        self.nodes().filter(move |&n| n != sink)
    }

    pub fn position(&self, n: NodeId) -> (f64, f64) {
        self.positions[n.index()]
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        let (pa, pb) = (self.position(a), self.position(b));
        (pa.0 - pb.0).hypot(pa.1 - pb.1)
    }

    pub fn link_index(&self, src: NodeId, dst: NodeId) -> usize {
        src.index() * self.node_count() + dst.index()
    }

    pub fn link(&self, src: NodeId, dst: NodeId) -> Option<&LinkQuality> {
        self.links[self.link_index(src, dst)].as_ref()
    }

    /// Stores `q` if it is reachable, otherwise removes the link.
    pub fn set_link(&mut self, src: NodeId, dst: NodeId, q: LinkQuality) {
        if src == dst {
            return;
        }
        let i = self.link_index(src, dst);
        self.links[i] = q.reachable.then_some(q);
        if self.links[i].is_none() {
            self.costs[i] = None;
        }
    }

    pub fn remove_link(&mut self, src: NodeId, dst: NodeId) {
        let i = self.link_index(src, dst);
        self.links[i] = None;
        self.costs[i] = None;
    }

    pub fn link_count(&self) -> usize {
        self.links.iter().filter(|l| l.is_some()).count()
    }

    /// Directed links in `(src, dst)` order.
    pub fn links(&self) -> impl Iterator<Item = (NodeId, NodeId, &LinkQuality)> + '_ {
        let n = self.node_count();
        self.links.iter().enumerate().filter_map(move |(i, l)| {
            l.as_ref()
                .map(|q| (NodeId((i / n) as u32), NodeId((i % n) as u32), q))
        })
    }

    pub fn out_links(&self, src: NodeId) -> impl Iterator<Item = (NodeId, &LinkQuality)> + '_ {
        let n = self.node_count();
        self.links[src.index() * n..(src.index() + 1) * n]
            .iter()
            .enumerate()
            .filter_map(|(j, l)| l.as_ref().map(|q| (NodeId(j as u32), q)))
    }

    pub fn in_links(&self, dst: NodeId) -> impl Iterator<Item = (NodeId, &LinkQuality)> + '_ {
        self.nodes()
            .filter_map(move |src| self.link(src, dst).map(|q| (src, q)))
    }

    pub fn cost(&self, src: NodeId, dst: NodeId) -> Option<CrispCost> {
        self.costs[self.link_index(src, dst)]
    }

    pub fn set_cost(&mut self, src: NodeId, dst: NodeId, cost: CrispCost) {
        let i = self.link_index(src, dst);
        if self.links[i].is_some() {
            self.costs[i] = Some(cost);
        }
    }

    /// Appends a node with no links and returns its id.
    pub fn add_node(&mut self, pos: (f64, f64)) -> Result<NodeId> {
        if self.positions.contains(&pos) {
            return Err(Error::Geometry(format!("position {pos:?} is taken")));
        }
        let old = self.node_count();
        let n = old + 1;
        let mut links = vec![None; n * n];
        let mut costs = vec![None; n * n];
        for s in 0..old {
            for d in 0..old {
                links[s * n + d] = self.links[s * old + d];
                costs[s * n + d] = self.costs[s * old + d];
            }
        }
        self.positions.push(pos);
        self.links = links;
        self.costs = costs;
        Ok(NodeId(old as u32))
    }

    /// FNV-1a over positions and link qualities.
    pub fn checksum(&self) -> u64 {
        const PRIME: u64 = 0x0000_0100_0000_01B3;
        let mut h: u64 = 0xCBF2_9CE4_8422_2325;
        let mut eat = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(PRIME);
            }
        };
        eat(u64::from(self.sink.0));
        for &(x, y) in &self.positions {
            eat(x.to_bits());
            eat(y.to_bits());
        }
        for (i, l) in self.links.iter().enumerate() {
            if let Some(q) = l {
                eat(i as u64);
                eat(q.mean_rssi.to_bits());
                eat(q.rssi_stddev.to_bits());
                eat(q.per.to_bits());
            }
        }
        h
    }

    /// Writes `src,dst,mean_rssi,stddev,per,cost`, one row per directed link.
    /// `cost` is empty for links without a fuzzy cost.
    pub fn write_edge_list<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let to_err = |e: csv::Error| Error::Consistency(format!("edge list: {e}"));
        out.write_record(["src", "dst", "mean_rssi", "stddev", "per", "cost"])
            .map_err(to_err)?;
        for (s, d, q) in self.links() {
            let cost = self
                .cost(s, d)
                .map(|c| c.value().to_string())
                .unwrap_or_default();
            out.write_record([
                s.to_string(),
                d.to_string(),
                q.mean_rssi.to_string(),
                q.rssi_stddev.to_string(),
                q.per.to_string(),
                cost,
            ])
            .map_err(to_err)?;
        }
        out.flush()
            .map_err(|e| Error::Consistency(format!("edge list: {e}")))?;
        Ok(())
    }

    pub fn edge_list(&self) -> String {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("edge list is ASCII")
    }
}

/// Lays out a scenario: sink at the centre grid point (node 0), sensors on the
/// remaining points in row-major order (nodes 1..=node_count).
pub fn build_grid(s: &Scenario) -> Result<NetworkGraph> {
    s.validate()?;
    let side = s.grid_side();
    let available = side * side - 1;
    if s.node_count > available {
        return Err(Error::Scenario(format!(
            "{}: {} sensors do not fit a {side}x{side} grid ({available} free points)",
            s.name, s.node_count
        )));
    }
    let centre = (side / 2, side / 2);
    let at = |col: usize, row: usize| (col as f64 * s.spacing, row as f64 * s.spacing);
    let mut positions = vec![at(centre.0, centre.1)];
    let sensors = (0..side)
        .flat_map(|row| (0..side).map(move |col| (col, row)))
        .filter(|&(col, row)| (col, row) != centre)
        .take(s.node_count)
        .map(|(col, row)| at(col, row));
    positions.extend(sensors);
    NetworkGraph::new(positions, NodeId(0))
}

/// Samples every ordered node pair. Each link uses the stream of `rng` with
/// its link index substituted.
pub fn populate_links(
    g: &mut NetworkGraph,
    p: &PropagationParams,
    rng: &RandomSource,
) -> Result<()> {
    let nodes: Vec<NodeId> = g.nodes().collect();
    for &src in &nodes {
        for &dst in &nodes {
            if src == dst {
                continue;
            }
            let stream = rng.with_link(g.link_index(src, dst) as u64);
            let q = sample_link(p, g.distance(src, dst), &stream)?;
            g.set_link(src, dst, q);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Route {
    pub next_hop: NodeId,
    /// Sum of link costs to the sink.
    pub cost: f64,
    pub hops: usize,
}

/// Next hop and accumulated cost of every routed node.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingTable {
    sink: NodeId,
    routes: BTreeMap<NodeId, Route>,
    unrouted: BTreeSet<NodeId>,
}

impl RoutingTable {
    pub fn sink(&self) -> NodeId {
        self.sink
    }

    pub fn route(&self, n: NodeId) -> Option<&Route> {
        self.routes.get(&n)
    }

    pub fn next_hop(&self, n: NodeId) -> Option<NodeId> {
        self.routes.get(&n).map(|r| r.next_hop)
    }

    pub fn path_cost(&self, n: NodeId) -> Option<f64> {
        self.routes.get(&n).map(|r| r.cost)
    }

    pub fn routes(&self) -> &BTreeMap<NodeId, Route> {
        &self.routes
    }

    pub fn routed(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.routes.keys().copied()
    }

    /// Members that have no path to the sink.
    pub fn unrouted(&self) -> &BTreeSet<NodeId> {
        &self.unrouted
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    /// Node list from `n` to the sink, both included.
    pub fn full_path(&self, n: NodeId) -> Option<Vec<NodeId>> {
        let mut path = vec![n];
        let mut cur = n;
        while cur != self.sink {
            cur = self.routes.get(&cur)?.next_hop;
            path.push(cur);
            if path.len() > self.routes.len() + 1 {
                return None;
            }
        }
        Some(path)
    }

    /// Number of members whose next hop differs between the two tables.
    pub fn changes_from(&self, other: &RoutingTable) -> usize {
        let keys: BTreeSet<_> = self.routes.keys().chain(other.routes.keys()).collect();
        keys.into_iter()
            .filter(|k| self.next_hop(**k) != other.next_hop(**k))
            .count()
    }
}

/// Minimum-cost routes from every node to the sink.
///
/// `cost(src, dst)` gives the weight of an existing link, or `None` to leave
/// it out. Weights must be non-negative. Equal-cost candidates are ordered by
/// hop count, then by the id of the next hop.
pub fn dijkstra_routes(
    g: &NetworkGraph,
    cost: impl Fn(NodeId, NodeId) -> Option<f64>,
) -> RoutingTable {
    let members = vec![true; g.node_count()];
    shortest_paths(g, &members, cost)
}

/// Like [`dijkstra_routes`], restricted to `members` (the sink always takes part).
pub fn dijkstra_routes_within(
    g: &NetworkGraph,
    members: &BTreeSet<NodeId>,
    cost: impl Fn(NodeId, NodeId) -> Option<f64>,
) -> RoutingTable {
    let mut mask = vec![false; g.node_count()];
    for m in members {
        if m.index() < mask.len() {
            mask[m.index()] = true;
        }
    }
    shortest_paths(g, &mask, cost)
}

type Label = (f64, usize, NodeId);

fn better(a: &Label, b: &Label) -> bool {
    a.0.total_cmp(&b.0)
        .then(a.1.cmp(&b.1))
        .then(a.2.cmp(&b.2))
        .is_lt()
}

fn shortest_paths(
    g: &NetworkGraph,
    members: &[bool],
    cost: impl Fn(NodeId, NodeId) -> Option<f64>,
) -> RoutingTable {
    let n = g.node_count();
    let sink = g.sink();
    let mut label: Vec<Option<Label>> = vec![None; n];
    let mut done = vec![false; n];
    label[sink.index()] = Some((0.0, 0, sink));

    loop {
        let next = (0..n)
            .filter(|&i| !done[i])
            .filter_map(|i| label[i].map(|l| (i, l)))
            .reduce(|a, b| if better(&b.1, &a.1) { b } else { a });
        let Some((v, (cv, hv, _))) = next else { break };
        done[v] = true;
        let vid = NodeId(v as u32);
        for (u, _) in g.in_links(vid) {
            let ui = u.index();
            if done[ui] || u == sink || !members[ui] {
                continue;
            }
            let Some(w) = cost(u, vid) else { continue };
            debug_assert!(w >= 0.0, "negative link cost {w} on {u}->{vid}");
            let cand = (w + cv, hv + 1, vid);
            if label[ui].is_none_or(|cur| better(&cand, &cur)) {
                label[ui] = Some(cand);
            }
        }
    }

    let mut routes = BTreeMap::new();
    let mut unrouted = BTreeSet::new();
    for id in g.sensors() {
        if !members[id.index()] {
            continue;
        }
        match label[id.index()] {
            Some((c, h, nh)) => {
                routes.insert(
                    id,
                    Route {
                        next_hop: nh,
                        cost: c,
                        hops: h,
                    },
                );
            }
            None => {
                unrouted.insert(id);
            }
        }
    }
    RoutingTable {
        sink,
        routes,
        unrouted,
    }
}
