//! Physical substrate network: graph construction, resource ledgers and
//! bandwidth-feasible path search.
//!
//! The substrate is a weighted undirected graph of servers and switches
//! grouped into data centers of three sizes (edge, core, central). CPU and
//! RAM are tracked in integer units, bandwidth in integer Mbps, so that
//! allocate/release pairs conserve capacity exactly.

use serde::{Deserialize, Serialize};

use crate::slice::PlacementRecord;

pub type NodeId = usize;
pub type LinkId = usize;
pub type DcId = usize;

/// Ordered list of link ids; empty when source and destination coincide.
pub type Path = Vec<LinkId>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Server,
    Switch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DcKind {
    Edge,
    Core,
    Central,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resource {
    Cpu,
    Ram,
}

impl std::fmt::Display for Resource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Resource::Cpu => write!(f, "cpu"),
            Resource::Ram => write!(f, "ram"),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum LedgerError {
    #[error("insufficient {resource} on node {node}: need {needed}, have {available}")]
    NodeCapacity {
        resource: Resource,
        node: NodeId,
        needed: u64,
        available: u64,
    },
    #[error("insufficient bandwidth on link {link}: need {needed} Mbps, have {available} Mbps")]
    LinkCapacity {
        link: LinkId,
        needed: u64,
        available: u64,
    },
    #[error("release would exceed maximum {resource} on node {node}")]
    NodeOverRelease { resource: Resource, node: NodeId },
    #[error("release would exceed initial bandwidth on link {link}")]
    LinkOverRelease { link: LinkId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub dc: DcId,
    pub cap_cpu: u64,
    pub max_cpu: u64,
    pub cap_ram: u64,
    pub max_ram: u64,
    /// Sum of the initial capacities of incident links, fixed at build time.
    pub max_bw: u64,
}

impl Node {
    pub fn is_server(&self) -> bool {
        self.kind == NodeKind::Server
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub id: LinkId,
    /// Endpoints with `a < b`.
    pub a: NodeId,
    pub b: NodeId,
    pub cap_bw: u64,
    pub init_bw: u64,
}

impl Link {
    pub fn other(&self, n: NodeId) -> NodeId {
        if n == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone)]
pub struct DataCenter {
    pub id: DcId,
    pub kind: DcKind,
    pub switch: NodeId,
    pub servers: Vec<NodeId>,
}

/// Counts and capacities for the reference substrate. Defaults reproduce a
/// national operator layout: 15 edge DCs of 4 servers, 5 core DCs of 10
/// servers and one central platform of 16 servers, every server with
/// 50 CPU / 300 RAM units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub edc_count: usize,
    pub cdc_count: usize,
    pub ccp_count: usize,
    pub servers_per_edc: usize,
    pub servers_per_cdc: usize,
    pub servers_per_ccp: usize,
    pub server_cpu: u64,
    pub server_ram: u64,
    pub intra_edc_gbps: f64,
    pub intra_cdc_gbps: f64,
    pub intra_ccp_gbps: f64,
    pub edc_transport_gbps: f64,
    pub cdc_mesh_gbps: f64,
    pub cdc_ccp_gbps: f64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            edc_count: 15,
            cdc_count: 5,
            ccp_count: 1,
            servers_per_edc: 4,
            servers_per_cdc: 10,
            servers_per_ccp: 16,
            server_cpu: 50,
            server_ram: 300,
            intra_edc_gbps: 10.0,
            intra_cdc_gbps: 100.0,
            intra_ccp_gbps: 100.0,
            edc_transport_gbps: 10.0,
            cdc_mesh_gbps: 100.0,
            cdc_ccp_gbps: 100.0,
        }
    }
}

pub fn gbps_to_mbps(gbps: f64) -> u64 {
    (gbps * 1000.0).round() as u64
}

impl TopologyConfig {
    /// Collects every violation instead of stopping at the first.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if self.edc_count + self.cdc_count + self.ccp_count == 0 {
            errs.push("topology: at least one data center is required".into());
        }
        if self.server_cpu == 0 {
            errs.push("topology: server_cpu must be > 0".into());
        }
        if self.server_ram == 0 {
            errs.push("topology: server_ram must be > 0".into());
        }
        for (name, v) in [
            ("intra_edc_gbps", self.intra_edc_gbps),
            ("intra_cdc_gbps", self.intra_cdc_gbps),
            ("intra_ccp_gbps", self.intra_ccp_gbps),
            ("edc_transport_gbps", self.edc_transport_gbps),
            ("cdc_mesh_gbps", self.cdc_mesh_gbps),
            ("cdc_ccp_gbps", self.cdc_ccp_gbps),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                errs.push(format!("topology: {name} must be a positive finite number"));
            }
        }
        // Edge DCs uplink to core DCs when present, otherwise to central
        // platforms; without either the graph falls apart.
        if self.edc_count > 1 && self.cdc_count == 0 && self.ccp_count == 0 {
            errs.push("topology: multiple EDCs require at least one CDC or CCP uplink".into());
        }
        // Central platforms are only interconnected through core DCs.
        if self.ccp_count > 1 && self.cdc_count == 0 {
            errs.push("topology: multiple CCPs require at least one CDC".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Psn {
    nodes: Vec<Node>,
    links: Vec<Link>,
    /// Per node: (neighbor, link id), sorted by neighbor id. The order fixes
    /// path tie-breaking, so it must stay deterministic.
    adj: Vec<Vec<(NodeId, LinkId)>>,
    servers: Vec<NodeId>,
    dcs: Vec<DataCenter>,
}

impl Psn {
    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id]
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn servers(&self) -> &[NodeId] {
        &self.servers
    }

    pub fn data_centers(&self) -> &[DataCenter] {
        &self.dcs
    }

    pub fn neighbors(&self, n: NodeId) -> &[(NodeId, LinkId)] {
        &self.adj[n]
    }

    /// Current total bandwidth on links incident to `n`.
    pub fn node_bw(&self, n: NodeId) -> u64 {
        self.adj[n].iter().map(|&(_, l)| self.links[l].cap_bw).sum()
    }

    /// Total CPU capacity over all servers (the `C` of the load model).
    pub fn total_server_cpu(&self) -> u64 {
        self.servers.iter().map(|&s| self.nodes[s].max_cpu).sum()
    }

    pub fn total_server_ram(&self) -> u64 {
        self.servers.iter().map(|&s| self.nodes[s].max_ram).sum()
    }

    /// Minimum-hop path from `src` to `dst` using only links with at least
    /// `bw_mbps` available. Ties are broken toward the smallest node-id
    /// sequence. `src == dst` yields the empty path; `None` means no feasible
    /// path exists.
    pub fn shortest_feasible_path(
        &self,
        src: NodeId,
        dst: NodeId,
        bw_mbps: u64,
    ) -> Option<Path> {
        if src == dst {
            return Some(Vec::new());
        }
        let dist = self.feasible_hops_from(dst, bw_mbps);
        let mut remaining = dist[src]?;
        let mut path = Vec::with_capacity(remaining as usize);
        let mut cur = src;
        while cur != dst {
            // Adjacency is sorted by neighbor id, so the first admissible
            // neighbor gives the lexicographically smallest sequence.
            let (next, link) = self.adj[cur]
                .iter()
                .copied()
                .find(|&(nbr, l)| {
                    self.links[l].cap_bw >= bw_mbps && dist[nbr] == Some(remaining - 1)
                })
                .expect("BFS distance guarantees a next hop");
            path.push(link);
            cur = next;
            remaining -= 1;
        }
        Some(path)
    }

    /// BFS hop counts from `origin` over links with at least `bw_mbps` free.
    pub fn feasible_hops_from(&self, origin: NodeId, bw_mbps: u64) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.nodes.len()];
        dist[origin] = Some(0);
        let mut queue = std::collections::VecDeque::from([origin]);
        while let Some(n) = queue.pop_front() {
            let d = dist[n].unwrap();
            for &(nbr, l) in &self.adj[n] {
                if self.links[l].cap_bw >= bw_mbps && dist[nbr].is_none() {
                    dist[nbr] = Some(d + 1);
                    queue.push_back(nbr);
                }
            }
        }
        dist
    }

    /// Atomically reserves `cpu`/`ram` on `node` and `bw` along every link of
    /// every path. On any insufficiency nothing is mutated and the first
    /// violated resource is reported (cpu, then ram, then links in path
    /// order).
    pub fn allocate(
        &mut self,
        node: NodeId,
        cpu: u64,
        ram: u64,
        paths: &[(&[LinkId], u64)],
    ) -> Result<(), LedgerError> {
        let n = &self.nodes[node];
        if n.cap_cpu < cpu {
            return Err(LedgerError::NodeCapacity {
                resource: Resource::Cpu,
                node,
                needed: cpu,
                available: n.cap_cpu,
            });
        }
        if n.cap_ram < ram {
            return Err(LedgerError::NodeCapacity {
                resource: Resource::Ram,
                node,
                needed: ram,
                available: n.cap_ram,
            });
        }
        // Paths may share links; demands accumulate per link.
        let mut demand: std::collections::HashMap<LinkId, u64> = std::collections::HashMap::new();
        for (path, bw) in paths {
            for &l in *path {
                let d = demand.entry(l).or_insert(0);
                *d += bw;
                if self.links[l].cap_bw < *d {
                    return Err(LedgerError::LinkCapacity {
                        link: l,
                        needed: *d,
                        available: self.links[l].cap_bw,
                    });
                }
            }
        }
        self.nodes[node].cap_cpu -= cpu;
        self.nodes[node].cap_ram -= ram;
        for (l, d) in demand {
            self.links[l].cap_bw -= d;
        }
        Ok(())
    }

    /// Exact inverse of every allocation in the record. Over-release is an
    /// integrity error and leaves the ledger untouched.
    pub fn release(&mut self, rec: &PlacementRecord) -> Result<(), LedgerError> {
        let mut node_cpu: std::collections::HashMap<NodeId, u64> = std::collections::HashMap::new();
        let mut node_ram: std::collections::HashMap<NodeId, u64> = std::collections::HashMap::new();
        for (&host, &(cpu, ram)) in rec.vnf_hosts.iter().zip(&rec.vnf_demands) {
            *node_cpu.entry(host).or_insert(0) += cpu;
            *node_ram.entry(host).or_insert(0) += ram;
        }
        let mut link_bw: std::collections::HashMap<LinkId, u64> = std::collections::HashMap::new();
        for (path, bw) in &rec.vl_paths {
            for &l in path {
                *link_bw.entry(l).or_insert(0) += bw;
            }
        }
        for (&n, &cpu) in &node_cpu {
            if self.nodes[n].cap_cpu + cpu > self.nodes[n].max_cpu {
                return Err(LedgerError::NodeOverRelease {
                    resource: Resource::Cpu,
                    node: n,
                });
            }
        }
        for (&n, &ram) in &node_ram {
            if self.nodes[n].cap_ram + ram > self.nodes[n].max_ram {
                return Err(LedgerError::NodeOverRelease {
                    resource: Resource::Ram,
                    node: n,
                });
            }
        }
        for (&l, &bw) in &link_bw {
            if self.links[l].cap_bw + bw > self.links[l].init_bw {
                return Err(LedgerError::LinkOverRelease { link: l });
            }
        }
        for (n, cpu) in node_cpu {
            self.nodes[n].cap_cpu += cpu;
        }
        for (n, ram) in node_ram {
            self.nodes[n].cap_ram += ram;
        }
        for (l, bw) in link_bw {
            self.links[l].cap_bw += bw;
        }
        Ok(())
    }

    /// Structural invariants: connectivity, no self-loops or duplicate links,
    /// ledger bounds and the fixed incident-bandwidth sums.
    pub fn check_invariants(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for l in &self.links {
            if l.a == l.b {
                errs.push(format!("link {} is a self-loop", l.id));
            }
            if !seen.insert((l.a.min(l.b), l.a.max(l.b))) {
                errs.push(format!("duplicate link between {} and {}", l.a, l.b));
            }
            if l.cap_bw > l.init_bw {
                errs.push(format!("link {} over capacity", l.id));
            }
        }
        for n in &self.nodes {
            if n.cap_cpu > n.max_cpu || n.cap_ram > n.max_ram {
                errs.push(format!("node {} over capacity", n.id));
            }
            let incident: u64 = self.adj[n.id].iter().map(|&(_, l)| self.links[l].init_bw).sum();
            if incident != n.max_bw {
                errs.push(format!(
                    "node {}: incident bandwidth {} != recorded max_bw {}",
                    n.id, incident, n.max_bw
                ));
            }
        }
        if !self.nodes.is_empty() {
            let reach = self.feasible_hops_from(0, 0);
            if reach.iter().any(|d| d.is_none()) {
                errs.push("graph is not connected".into());
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Snapshot of all capacity counters, for conservation checks.
    pub fn capacity_snapshot(&self) -> (Vec<(u64, u64)>, Vec<u64>) {
        (
            self.nodes.iter().map(|n| (n.cap_cpu, n.cap_ram)).collect(),
            self.links.iter().map(|l| l.cap_bw).collect(),
        )
    }
}

struct PsnBuilder {
    nodes: Vec<Node>,
    links: Vec<Link>,
    dcs: Vec<DataCenter>,
}

impl PsnBuilder {
    fn new() -> Self {
        PsnBuilder {
            nodes: Vec::new(),
            links: Vec::new(),
            dcs: Vec::new(),
        }
    }

    fn add_dc(&mut self, kind: DcKind, servers: usize, cpu: u64, ram: u64, intra_mbps: u64) -> DcId {
        let dc = self.dcs.len();
        let switch = self.add_node(NodeKind::Switch, dc, 0, 0);
        let mut ids = Vec::with_capacity(servers);
        for _ in 0..servers {
            let s = self.add_node(NodeKind::Server, dc, cpu, ram);
            self.add_link(switch, s, intra_mbps);
            ids.push(s);
        }
        self.dcs.push(DataCenter {
            id: dc,
            kind,
            switch,
            servers: ids,
        });
        dc
    }

    fn add_node(&mut self, kind: NodeKind, dc: DcId, cpu: u64, ram: u64) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node {
            id,
            kind,
            dc,
            cap_cpu: cpu,
            max_cpu: cpu,
            cap_ram: ram,
            max_ram: ram,
            max_bw: 0,
        });
        id
    }

    fn add_link(&mut self, a: NodeId, b: NodeId, mbps: u64) {
        let id = self.links.len();
        self.links.push(Link {
            id,
            a: a.min(b),
            b: a.max(b),
            cap_bw: mbps,
            init_bw: mbps,
        });
    }

    fn finish(mut self) -> Psn {
        let mut adj: Vec<Vec<(NodeId, LinkId)>> = vec![Vec::new(); self.nodes.len()];
        for l in &self.links {
            adj[l.a].push((l.b, l.id));
            adj[l.b].push((l.a, l.id));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        for n in &mut self.nodes {
            n.max_bw = adj[n.id].iter().map(|&(_, l)| self.links[l].init_bw).sum();
        }
        let servers = self
            .nodes
            .iter()
            .filter(|n| n.is_server())
            .map(|n| n.id)
            .collect();
        Psn {
            nodes: self.nodes,
            links: self.links,
            adj,
            servers,
            dcs: self.dcs,
        }
    }
}

/// Deterministic reference substrate: one switch per DC with all DC servers
/// attached, edge switches wired round-robin to core switches (or to central
/// ones when no core tier exists), core switches fully meshed and each core
/// switch linked to every central platform.
pub fn build_reference_psn(cfg: &TopologyConfig) -> Psn {
    debug_assert!(cfg.validate().is_ok(), "build requires a valid config");
    let mut b = PsnBuilder::new();
    let mut edc_switches = Vec::with_capacity(cfg.edc_count);
    let mut cdc_switches = Vec::with_capacity(cfg.cdc_count);
    let mut ccp_switches = Vec::with_capacity(cfg.ccp_count);
    for _ in 0..cfg.edc_count {
        let dc = b.add_dc(
            DcKind::Edge,
            cfg.servers_per_edc,
            cfg.server_cpu,
            cfg.server_ram,
            gbps_to_mbps(cfg.intra_edc_gbps),
        );
        edc_switches.push(b.dcs[dc].switch);
    }
    for _ in 0..cfg.cdc_count {
        let dc = b.add_dc(
            DcKind::Core,
            cfg.servers_per_cdc,
            cfg.server_cpu,
            cfg.server_ram,
            gbps_to_mbps(cfg.intra_cdc_gbps),
        );
        cdc_switches.push(b.dcs[dc].switch);
    }
    for _ in 0..cfg.ccp_count {
        let dc = b.add_dc(
            DcKind::Central,
            cfg.servers_per_ccp,
            cfg.server_cpu,
            cfg.server_ram,
            gbps_to_mbps(cfg.intra_ccp_gbps),
        );
        ccp_switches.push(b.dcs[dc].switch);
    }
    let uplinks = if !cdc_switches.is_empty() {
        &cdc_switches
    } else {
        &ccp_switches
    };
    if !uplinks.is_empty() {
        for (i, &sw) in edc_switches.iter().enumerate() {
            b.add_link(sw, uplinks[i % uplinks.len()], gbps_to_mbps(cfg.edc_transport_gbps));
        }
    }
    for i in 0..cdc_switches.len() {
        for j in i + 1..cdc_switches.len() {
            b.add_link(cdc_switches[i], cdc_switches[j], gbps_to_mbps(cfg.cdc_mesh_gbps));
        }
    }
    for &cdc in &cdc_switches {
        for &ccp in &ccp_switches {
            b.add_link(cdc, ccp, gbps_to_mbps(cfg.cdc_ccp_gbps));
        }
    }
    b.finish()
}
