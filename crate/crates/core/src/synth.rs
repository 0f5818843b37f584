//! Synthetic corpora: a three-tier AS hierarchy with a Tier-1 clique, route
//! collectors with a few vantage points each, and AS paths that follow
//! valley-free export. Optional noise adds prepending, IXP route servers and
//! paths with a valley.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{CollectorSet, GroundTruth, TruthLabel};
use crate::paths::{hop_pair_ok, AsPath, Asn, Link};
use crate::principle::{LinkState, RelLabeling};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub tier1: usize,
    pub tier2: usize,
    pub tier3: usize,
    pub collectors: usize,
    pub vantage_points: usize,
    pub paths_per_vantage_point: usize,
    /// Peering probability between two Tier-2 ASes; Tier-3 pairs use a quarter.
    pub peer_prob: f64,
    pub prepend_prob: f64,
    /// Chance a peering hop is announced through an IXP route server.
    pub route_server_prob: f64,
    /// Chance a path gets an uphill hop after its downhill part.
    pub valley_prob: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            tier1: 4,
            tier2: 20,
            tier3: 80,
            collectors: 8,
            vantage_points: 3,
            paths_per_vantage_point: 40,
            peer_prob: 0.08,
            prepend_prob: 0.05,
            route_server_prob: 0.05,
            valley_prob: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Small instance for property checks.
    pub fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            tier1: 3,
            tier2: 6,
            tier3: 14,
            collectors: 4,
            vantage_points: 2,
            paths_per_vantage_point: 8,
            prepend_prob: 0.0,
            route_server_prob: 0.0,
            seed,
            ..Default::default()
        }
    }
}

/// Business relationships of the generated hierarchy.
#[derive(Debug, Clone, Default)]
pub struct Hierarchy {
    pub tiers: [Vec<Asn>; 3],
    pub providers: BTreeMap<Asn, Vec<Asn>>,
    pub customers: BTreeMap<Asn, Vec<Asn>>,
    pub peers: BTreeMap<Asn, Vec<Asn>>,
    pub truth: GroundTruth,
}

impl Hierarchy {
    fn add_p2c(&mut self, provider: Asn, customer: Asn) {
        let link = Link::new(provider, customer).expect("distinct ASes");
        if self.truth.insert(link, TruthLabel::P2C { provider }).is_ok() {
            self.providers.entry(customer).or_default().push(provider);
            self.customers.entry(provider).or_default().push(customer);
        }
    }

    fn add_p2p(&mut self, a: Asn, b: Asn) {
        let link = Link::new(a, b).expect("distinct ASes");
        if !self.truth.labels.contains_key(&link) {
            self.truth.insert(link, TruthLabel::P2P).expect("fresh link");
            self.peers.entry(a).or_default().push(b);
            self.peers.entry(b).or_default().push(a);
        }
    }

    pub fn all_ases(&self) -> Vec<Asn> {
        self.tiers.iter().flatten().copied().collect()
    }

    fn list(map: &BTreeMap<Asn, Vec<Asn>>, a: Asn) -> &[Asn] {
        map.get(&a).map_or(&[], Vec::as_slice)
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub collectors: CollectorSet,
    pub tier1: BTreeSet<Asn>,
    pub route_servers: BTreeSet<Asn>,
    pub truth: GroundTruth,
    pub hierarchy: Hierarchy,
}

fn asn(v: usize) -> Asn {
    Asn::new(v as u32).expect("non-zero")
}

pub fn generate_hierarchy(config: &SynthConfig, rng: &mut ChaCha8Rng) -> Hierarchy {
    let mut h = Hierarchy {
        tiers: [
            (1..=config.tier1).map(asn).collect(),
            (0..config.tier2).map(|i| asn(1000 + i)).collect(),
            (0..config.tier3).map(|i| asn(10000 + i)).collect(),
        ],
        ..Default::default()
    };
    let t1 = h.tiers[0].clone();
    let t2 = h.tiers[1].clone();
    let t3 = h.tiers[2].clone();
    for (i, &a) in t1.iter().enumerate() {
        for &b in &t1[i + 1..] {
            h.add_p2p(a, b);
        }
    }
    for &a in &t2 {
        let k = rng.gen_range(1..=2usize).min(t1.len());
        for &p in t1.choose_multiple(rng, k) {
            h.add_p2c(p, a);
        }
    }
    for (i, &a) in t2.iter().enumerate() {
        for &b in &t2[i + 1..] {
            if rng.gen_bool(config.peer_prob) {
                h.add_p2p(a, b);
            }
        }
    }
    for &a in &t3 {
        let k = rng.gen_range(1..=3usize).min(t2.len().max(1));
        let pool = if t2.is_empty() || rng.gen_bool(0.1) { &t1 } else { &t2 };
        for &p in pool.choose_multiple(rng, k) {
            h.add_p2c(p, a);
        }
    }
    for (i, &a) in t3.iter().enumerate() {
        for &b in &t3[i + 1..] {
            if rng.gen_bool(config.peer_prob / 4.0) {
                h.add_p2p(a, b);
            }
        }
    }
    h
}

fn pick(rng: &mut ChaCha8Rng, options: &[Asn], path: &[Asn]) -> Option<Asn> {
    let free: Vec<Asn> = options.iter().copied().filter(|a| !path.contains(a)).collect();
    free.choose(rng).copied()
}

/// Valley-free walk from `vp`: up through providers, at most one peering,
/// then down through customers.
fn walk(h: &Hierarchy, vp: Asn, config: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<Asn> {
    let mut path = vec![vp];
    while rng.gen_bool(0.75) {
        let cur = *path.last().unwrap();
        match pick(rng, Hierarchy::list(&h.providers, cur), &path) {
            Some(p) => path.push(p),
            None => break,
        }
    }
    let cur = *path.last().unwrap();
    let peer_chance = if h.tiers[0].contains(&cur) { 0.7 } else { 0.3 };
    if rng.gen_bool(peer_chance) {
        if let Some(p) = pick(rng, Hierarchy::list(&h.peers, cur), &path) {
            path.push(p);
        }
    }
    let down = rng.gen_range(0..=3);
    for _ in 0..down {
        let cur = *path.last().unwrap();
        match pick(rng, Hierarchy::list(&h.customers, cur), &path) {
            Some(c) => path.push(c),
            None => break,
        }
    }
    if path.len() == 1 {
        let cur = path[0];
        let any: Vec<Asn> = [&h.providers, &h.customers, &h.peers]
            .iter()
            .flat_map(|m| Hierarchy::list(m, cur).iter().copied())
            .collect();
        if let Some(n) = pick(rng, &any, &path) {
            path.push(n);
        }
    }
    if rng.gen_bool(config.valley_prob) {
        let cur = *path.last().unwrap();
        if let Some(p) = pick(rng, Hierarchy::list(&h.providers, cur), &path) {
            path.push(p);
        }
    }
    path
}

pub fn generate_corpus(config: &SynthConfig) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let hierarchy = generate_hierarchy(config, &mut rng);
    let all = hierarchy.all_ases();
    let route_servers: Vec<Asn> = (0..3).map(|i| asn(60000 + i)).collect();
    let mut used_rs = BTreeSet::new();
    let mut paths = Vec::new();
    for c in 0..config.collectors {
        let id = format!("rc{c:02}");
        let vps: Vec<Asn> = all.choose_multiple(&mut rng, config.vantage_points.min(all.len())).copied().collect();
        for &vp in &vps {
            for _ in 0..config.paths_per_vantage_point {
                let mut asns = walk(&hierarchy, vp, config, &mut rng);
                if asns.len() < 2 {
                    continue;
                }
                let peering = asns
                    .windows(2)
                    .position(|w| hierarchy.truth.get(&Link::new(w[0], w[1]).unwrap()) == Some(TruthLabel::P2P));
                if let Some(i) = peering {
                    if rng.gen_bool(config.route_server_prob) {
                        let rs = *route_servers.choose(&mut rng).unwrap();
                        used_rs.insert(rs);
                        asns.insert(i + 1, rs);
                    }
                }
                if rng.gen_bool(config.prepend_prob) {
                    let i = rng.gen_range(0..asns.len());
                    asns.insert(i, asns[i]);
                }
                paths.push(AsPath::new(id.clone(), asns));
            }
        }
    }
    SynthCorpus {
        collectors: CollectorSet::from_paths(paths),
        tier1: hierarchy.tiers[0].iter().copied().collect(),
        route_servers: used_rs,
        truth: hierarchy.truth.clone(),
        hierarchy,
    }
}

/// Random paths over a handful of ASes with a random partial labeling.
/// Consecutive decided hops are always valley-free, so every valley a path
/// can have involves an open link. Up to `max_paths` paths of 2 to 6 ASes.
pub fn random_instance(rng: &mut ChaCha8Rng, max_paths: usize) -> (Vec<AsPath>, RelLabeling) {
    loop {
        let universe: Vec<u32> = (1..=9).collect();
        let n_paths = rng.gen_range(1..=max_paths.max(1));
        let paths: Vec<AsPath> = (0..n_paths)
            .map(|_| {
                let len = rng.gen_range(2..=6);
                let asns: Vec<u32> = universe.choose_multiple(rng, len).copied().collect();
                AsPath::from_u32s("rc", &asns)
            })
            .collect();
        let mut labeling = RelLabeling::undecided(paths.iter().flat_map(AsPath::links));
        for (link, state) in labeling.states.iter_mut() {
            let r: f64 = rng.gen();
            *state = if r < 0.55 {
                LinkState::Undecided
            } else if r < 0.70 {
                LinkState::P2P
            } else if r < 0.90 {
                LinkState::P2C { provider: if rng.gen_bool(0.5) { link.u() } else { link.v() } }
            } else {
                LinkState::Conflict
            };
        }
        let ok = paths.iter().all(|p| {
            let hops: Vec<_> = p.hops().map(|(a, b)| labeling.hop(a, b)).collect();
            hops.windows(2).all(|w| match (w[0], w[1]) {
                (Some(a), Some(b)) => hop_pair_ok(a, b),
                _ => true,
            })
        });
        if ok {
            return (paths, labeling);
        }
    }
}
