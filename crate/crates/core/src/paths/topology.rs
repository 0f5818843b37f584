use std::collections::{BTreeMap, BTreeSet};

use super::{AsPath, Asn, Link};

/// Where a link was observed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkObservation {
    pub collectors: BTreeSet<String>,
    pub path_count: usize,
}

/// Undirected AS graph induced by a path set.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Topology {
    pub links: BTreeMap<Link, LinkObservation>,
    pub node_degree: BTreeMap<Asn, usize>,
    /// Unique neighbours seen while the AS sits in a non-terminal position.
    pub transit_degree: BTreeMap<Asn, usize>,
    pub vantage_points: BTreeSet<Asn>,
}

impl Topology {
    pub fn ases(&self) -> impl Iterator<Item = Asn> + '_ {
        self.node_degree.keys().copied()
    }

    pub fn contains_link(&self, link: &Link) -> bool {
        self.links.contains_key(link)
    }

    pub fn node_degree_of(&self, a: Asn) -> usize {
        self.node_degree.get(&a).copied().unwrap_or(0)
    }

    pub fn transit_degree_of(&self, a: Asn) -> usize {
        self.transit_degree.get(&a).copied().unwrap_or(0)
    }
}

pub fn build_topology(paths: &[AsPath]) -> Topology {
    let mut topo = Topology::default();
    let mut neighbours: BTreeMap<Asn, BTreeSet<Asn>> = BTreeMap::new();
    let mut transit: BTreeMap<Asn, BTreeSet<Asn>> = BTreeMap::new();

    for path in paths {
        let Some(vp) = path.vantage_point() else { continue };
        topo.vantage_points.insert(vp);
        for &a in &path.asns {
            neighbours.entry(a).or_default();
        }
        for (a, b) in path.hops() {
            let Some(link) = Link::new(a, b) else { continue };
            let obs = topo.links.entry(link).or_default();
            obs.path_count += 1;
            obs.collectors.insert(path.collector.clone());
            neighbours.entry(a).or_default().insert(b);
            neighbours.entry(b).or_default().insert(a);
        }
        let n = path.asns.len();
        for i in 1..n.saturating_sub(1) {
            let entry = transit.entry(path.asns[i]).or_default();
            entry.insert(path.asns[i - 1]);
            entry.insert(path.asns[i + 1]);
        }
    }

    topo.node_degree = neighbours.iter().map(|(a, n)| (*a, n.len())).collect();
    topo.transit_degree = neighbours.keys().map(|a| (*a, transit.get(a).map_or(0, BTreeSet::len))).collect();
    topo
}
