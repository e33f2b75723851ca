//! Sequential placement MDP: one episode places one request, one VNF per
//! step. An action names a substrate node; it succeeds when the node is a
//! server with enough CPU and RAM and, from the second VNF on, a
//! bandwidth-feasible path from the previous VNF's host exists. The episode
//! ends on the first unsuccessful action (the request is rejected and all
//! partial allocations are rolled back) or when the last VNF lands.

use serde::{Deserialize, Serialize};

use crate::slice::{Nspr, PlacementRecord};
use crate::topology::{LedgerError, NodeId, Psn};

/// View of the substrate and the pending placement fed to the policy.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    /// Per-node residuals, indexed by node id.
    pub cap_cpu: Vec<u64>,
    pub cap_ram: Vec<u64>,
    /// Per-node sum of residual bandwidth on incident links.
    pub cap_bw: Vec<u64>,
    /// Per-node count of current-request VNFs already placed there.
    pub chi: Vec<u32>,
    /// 1-based index of the VNF to place next.
    pub vnf_index: usize,
    /// VNFs still to place, `|V| - v + 1`.
    pub remaining: usize,
    pub vnf_count: usize,
    pub req_cpu: u64,
    pub req_ram: u64,
    /// Sum of bandwidth required by VLs incident to the current VNF.
    pub req_bw: u64,
    /// Bandwidth of the VL to the previous VNF (0 for the first VNF).
    pub prev_vl_bw: u64,
    pub prev_host: Option<NodeId>,
}

/// Reward components of a single step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDelta {
    /// +100 on success, -100 on failure.
    pub acceptance: f64,
    /// Post-allocation `cap_cpu/M_cpu + cap_ram/M_ram` of the chosen server.
    pub load_balance: f64,
    /// `1/|P|` for the routed VL, 1 when the hosts coincide or for the first
    /// VNF.
    pub consumption: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: Option<State>,
    /// Raw reward: 0 mid-episode, the accumulated sum on final success, -100
    /// on failure.
    pub reward_raw: f64,
    /// `normalize_reward(reward_raw, |V|)`.
    pub reward: f64,
    pub done: bool,
    pub accepted: bool,
    pub delta: StepDelta,
}

/// Per-episode log record, one JSON line per episode in the run output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub nspr_id: u64,
    pub class: String,
    pub actions: Vec<NodeId>,
    /// (acceptance, load balance, consumption) per step.
    pub deltas: Vec<(f64, f64, f64)>,
    pub reward_raw: f64,
    pub reward: f64,
    pub accepted: bool,
}

/// Positive rewards map onto [0, 10] against the analytic per-episode
/// maximum `200 * |V|` (100 acceptance, load balance at most 2, consumption
/// at most 1 per step); negative rewards scale by 1/10.
pub fn normalize_reward(raw: f64, vnf_count: usize) -> f64 {
    if raw > 0.0 {
        raw * 10.0 / (200.0 * vnf_count as f64)
    } else {
        raw / 10.0
    }
}

struct ActiveEpisode {
    nspr: Nspr,
    next_vnf: usize,
    chi: Vec<u32>,
    record: PlacementRecord,
    deltas: Vec<StepDelta>,
}

/// Owns the substrate for one simulation run and steps episodes against it.
pub struct Env {
    psn: Psn,
    episode: Option<ActiveEpisode>,
    completed: Option<PlacementRecord>,
}

impl Env {
    pub fn new(psn: Psn) -> Self {
        Env {
            psn,
            episode: None,
            completed: None,
        }
    }

    pub fn psn(&self) -> &Psn {
        &self.psn
    }

    pub fn psn_mut(&mut self) -> &mut Psn {
        &mut self.psn
    }

    pub fn episode_active(&self) -> bool {
        self.episode.is_some()
    }

    /// Begins the placement of `nspr`: the first VNF is up, the tracker is
    /// all zero and features reflect current residuals.
    pub fn reset(&mut self, nspr: Nspr) -> State {
        let chi = vec![0; self.psn.node_count()];
        let record = PlacementRecord::empty(nspr.id);
        self.completed = None;
        self.episode = Some(ActiveEpisode {
            nspr,
            next_vnf: 1,
            chi,
            record,
            deltas: Vec::new(),
        });
        self.current_state()
    }

    fn current_state(&self) -> State {
        let ep = self.episode.as_ref().expect("no active episode");
        let v = ep.next_vnf;
        let nspr = &ep.nspr;
        State {
            cap_cpu: self.psn.nodes().iter().map(|n| n.cap_cpu).collect(),
            cap_ram: self.psn.nodes().iter().map(|n| n.cap_ram).collect(),
            cap_bw: (0..self.psn.node_count()).map(|n| self.psn.node_bw(n)).collect(),
            chi: ep.chi.clone(),
            vnf_index: v,
            remaining: nspr.vnf_count - v + 1,
            vnf_count: nspr.vnf_count,
            req_cpu: nspr.cpu_per_vnf,
            req_ram: nspr.ram_per_vnf,
            req_bw: nspr.incident_bw_mbps(v),
            prev_vl_bw: if v > 1 { nspr.vl_bw_mbps } else { 0 },
            prev_host: ep.record.vnf_hosts.last().copied(),
        }
    }

    /// Places the current VNF on `action`. Choosing a switch, an overloaded
    /// server or a server unreachable at the required bandwidth is a failing
    /// action, not an error: the episode terminates with reward -100 and the
    /// substrate rolls back to its pre-episode state.
    pub fn step(&mut self, action: NodeId) -> StepOutcome {
        assert!(self.episode.is_some(), "step without active episode");
        let (feasible, path) = self.check_action(action);
        if !feasible {
            return self.fail_episode();
        }
        let path = path.unwrap_or_default();
        let (cpu, ram, bw, v, vnf_count) = {
            let ep = self.episode.as_ref().expect("checked above");
            (
                ep.nspr.cpu_per_vnf,
                ep.nspr.ram_per_vnf,
                ep.nspr.vl_bw_mbps,
                ep.next_vnf,
                ep.nspr.vnf_count,
            )
        };
        let link_demand: &[(&[usize], u64)] = &[(&path, bw)];
        self.psn
            .allocate(
                action,
                cpu,
                ram,
                if v > 1 && !path.is_empty() { link_demand } else { &[] },
            )
            .expect("feasibility was checked before allocating");

        let node = self.psn.node(action);
        let load_balance =
            node.cap_cpu as f64 / node.max_cpu as f64 + node.cap_ram as f64 / node.max_ram as f64;
        let consumption = if v > 1 && !path.is_empty() {
            1.0 / path.len() as f64
        } else {
            1.0
        };
        let delta = StepDelta {
            acceptance: 100.0,
            load_balance,
            consumption,
        };

        let ep = self.episode.as_mut().expect("active");
        if v > 1 {
            ep.record.vl_paths.push((path, bw));
        }
        ep.record.vnf_hosts.push(action);
        ep.record.vnf_demands.push((cpu, ram));
        ep.chi[action] += 1;
        ep.deltas.push(delta);
        ep.next_vnf += 1;

        if v == vnf_count {
            let raw: f64 = ep
                .deltas
                .iter()
                .map(|d| d.acceptance * d.load_balance * d.consumption)
                .sum();
            let mut done = self.episode.take().expect("active");
            done.record.complete = true;
            self.completed = Some(done.record);
            StepOutcome {
                state: None,
                reward_raw: raw,
                reward: normalize_reward(raw, vnf_count),
                done: true,
                accepted: true,
                delta,
            }
        } else {
            StepOutcome {
                state: Some(self.current_state()),
                reward_raw: 0.0,
                reward: 0.0,
                done: false,
                accepted: false,
                delta,
            }
        }
    }

    fn check_action(&self, action: NodeId) -> (bool, Option<Vec<usize>>) {
        let ep = self.episode.as_ref().expect("active");
        if action >= self.psn.node_count() {
            return (false, None);
        }
        let node = self.psn.node(action);
        if !node.is_server()
            || node.cap_cpu < ep.nspr.cpu_per_vnf
            || node.cap_ram < ep.nspr.ram_per_vnf
        {
            return (false, None);
        }
        if ep.next_vnf == 1 {
            return (true, None);
        }
        let prev = *ep.record.vnf_hosts.last().expect("previous VNF placed");
        match self.psn.shortest_feasible_path(prev, action, ep.nspr.vl_bw_mbps) {
            Some(path) => (true, Some(path)),
            None => (false, None),
        }
    }

    fn fail_episode(&mut self) -> StepOutcome {
        let ep = self.episode.take().expect("active");
        self.psn
            .release(&ep.record)
            .expect("rollback must restore the pre-episode ledger");
        let delta = StepDelta {
            acceptance: -100.0,
            load_balance: 0.0,
            consumption: 0.0,
        };
        StepOutcome {
            state: None,
            reward_raw: -100.0,
            reward: normalize_reward(-100.0, ep.nspr.vnf_count),
            done: true,
            accepted: false,
            delta,
        }
    }

    /// Takes the completed placement record after a successful episode.
    pub fn finish(&mut self) -> Option<PlacementRecord> {
        self.completed.take()
    }

    /// Lifespan expiry: return all of a placement's resources.
    pub fn on_departure(&mut self, rec: &PlacementRecord) -> Result<(), LedgerError> {
        self.psn.release(rec)
    }
}
