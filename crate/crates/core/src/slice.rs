//! Network slice placement requests: request classes and their chain graphs.

use serde::{Deserialize, Serialize};

use crate::topology::{LinkId, NodeId};

/// A request class with homogeneous per-VNF requirements. Defaults mirror an
/// eMBB setting: 25 CPU / 150 RAM per VNF, 2 Gbps per virtual link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NsprClass {
    pub name: String,
    pub vnf_count: usize,
    pub cpu_per_vnf: u64,
    pub ram_per_vnf: u64,
    pub vl_bw_gbps: f64,
    /// Mean lifespan 1/mu in simulation time units.
    pub mean_lifespan: f64,
    /// Share of the global load target generated by this class.
    pub load_share: f64,
}

impl Default for NsprClass {
    fn default() -> Self {
        NsprClass {
            name: String::new(),
            vnf_count: 5,
            cpu_per_vnf: 25,
            ram_per_vnf: 150,
            vl_bw_gbps: 2.0,
            mean_lifespan: 20.0,
            load_share: 0.5,
        }
    }
}

impl NsprClass {
    pub fn volatile() -> Self {
        NsprClass {
            name: "volatile".into(),
            vnf_count: 5,
            mean_lifespan: 20.0,
            ..NsprClass::default()
        }
    }

    pub fn long_term() -> Self {
        NsprClass {
            name: "long_term".into(),
            vnf_count: 10,
            mean_lifespan: 500.0,
            ..NsprClass::default()
        }
    }

    pub fn vl_bw_mbps(&self) -> u64 {
        crate::topology::gbps_to_mbps(self.vl_bw_gbps)
    }

    /// Total CPU units requested by one instance (the A-per-resource figure
    /// of the load model).
    pub fn total_cpu(&self) -> u64 {
        self.vnf_count as u64 * self.cpu_per_vnf
    }

    pub fn total_ram(&self) -> u64 {
        self.vnf_count as u64 * self.ram_per_vnf
    }

    pub fn total_bw_mbps(&self) -> u64 {
        self.vnf_count.saturating_sub(1) as u64 * self.vl_bw_mbps()
    }

    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut errs = Vec::new();
        if self.vnf_count == 0 {
            errs.push(format!("class {}: vnf_count must be >= 1", self.name));
        }
        if self.cpu_per_vnf == 0 || self.ram_per_vnf == 0 {
            errs.push(format!("class {}: per-VNF requirements must be > 0", self.name));
        }
        if !(self.vl_bw_gbps > 0.0) {
            errs.push(format!("class {}: vl_bw_gbps must be > 0", self.name));
        }
        if !(self.mean_lifespan > 0.0) {
            errs.push(format!("class {}: mean_lifespan must be > 0", self.name));
        }
        if !(self.load_share >= 0.0) {
            errs.push(format!("class {}: load_share must be >= 0", self.name));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

/// One arrived request: a chain of `vnf_count` VNFs joined by virtual links
/// in index order, with the realized lifespan drawn at arrival.
#[derive(Debug, Clone, PartialEq)]
pub struct Nspr {
    pub id: u64,
    pub class_index: usize,
    pub vnf_count: usize,
    pub cpu_per_vnf: u64,
    pub ram_per_vnf: u64,
    pub vl_bw_mbps: u64,
    pub arrival_time: f64,
    pub lifespan: f64,
}

impl Nspr {
    pub fn vl_count(&self) -> usize {
        self.vnf_count - 1
    }

    /// Sum of bandwidth requirements of VLs incident to VNF `v` (1-based):
    /// interior VNFs touch two links, chain endpoints one, single-VNF chains
    /// none.
    pub fn incident_bw_mbps(&self, v: usize) -> u64 {
        debug_assert!(v >= 1 && v <= self.vnf_count);
        if self.vnf_count == 1 {
            0
        } else if v == 1 || v == self.vnf_count {
            self.vl_bw_mbps
        } else {
            2 * self.vl_bw_mbps
        }
    }

    pub fn departure_time(&self) -> f64 {
        self.arrival_time + self.lifespan
    }
}

/// Materializes an arriving request of the given class as a chain graph.
pub fn make_nspr(
    class: &NsprClass,
    class_index: usize,
    id: u64,
    arrival_time: f64,
    lifespan: f64,
) -> Nspr {
    assert!(lifespan > 0.0, "lifespan must be positive");
    Nspr {
        id,
        class_index,
        vnf_count: class.vnf_count,
        cpu_per_vnf: class.cpu_per_vnf,
        ram_per_vnf: class.ram_per_vnf,
        vl_bw_mbps: class.vl_bw_mbps(),
        arrival_time,
        lifespan,
    }
}

/// Where a (possibly partially) placed request lives on the substrate:
/// one host per placed VNF and one routed path per placed VL.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementRecord {
    pub nspr_id: u64,
    pub vnf_hosts: Vec<NodeId>,
    /// (cpu, ram) reserved per placed VNF, index-aligned with `vnf_hosts`.
    pub vnf_demands: Vec<(u64, u64)>,
    /// (link path, bandwidth Mbps) per placed VL; empty paths mean both
    /// endpoints share a server.
    pub vl_paths: Vec<(Vec<LinkId>, u64)>,
    pub complete: bool,
}

impl PlacementRecord {
    pub fn empty(nspr_id: u64) -> Self {
        PlacementRecord {
            nspr_id,
            vnf_hosts: Vec::new(),
            vnf_demands: Vec::new(),
            vl_paths: Vec::new(),
            complete: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volatile_class_matches_embb_setting() {
        let c = NsprClass::volatile();
        let nspr = make_nspr(&c, 0, 1, 0.0, 20.0);
        assert_eq!(nspr.vnf_count, 5);
        assert_eq!(nspr.cpu_per_vnf, 25);
        assert_eq!(nspr.ram_per_vnf, 150);
        assert_eq!(nspr.vl_count(), 4);
        assert_eq!(nspr.vl_bw_mbps, 2_000);
    }

    #[test]
    fn long_term_class_has_ten_vnfs_nine_vls() {
        let c = NsprClass::long_term();
        assert_eq!(c.mean_lifespan, 500.0);
        let nspr = make_nspr(&c, 1, 2, 3.5, 480.0);
        assert_eq!(nspr.vnf_count, 10);
        assert_eq!(nspr.vl_count(), 9);
        assert_eq!(nspr.departure_time(), 483.5);
    }

    #[test]
    fn single_vnf_chain_has_no_vls() {
        let c = NsprClass {
            name: "tiny".into(),
            vnf_count: 1,
            ..NsprClass::default()
        };
        let nspr = make_nspr(&c, 0, 3, 1.0, 2.0);
        assert_eq!(nspr.vl_count(), 0);
        assert_eq!(nspr.incident_bw_mbps(1), 0);
    }

    #[test]
    fn incident_bandwidth_doubles_in_the_interior() {
        let nspr = make_nspr(&NsprClass::volatile(), 0, 4, 0.0, 1.0);
        assert_eq!(nspr.incident_bw_mbps(1), 2_000);
        assert_eq!(nspr.incident_bw_mbps(3), 4_000);
        assert_eq!(nspr.incident_bw_mbps(5), 2_000);
    }

    #[test]
    fn class_totals_are_vnf_count_times_requirement() {
        let c = NsprClass::volatile();
        assert_eq!(c.total_cpu(), 125);
        assert_eq!(c.total_ram(), 750);
        assert_eq!(c.total_bw_mbps(), 8_000);
    }
}
