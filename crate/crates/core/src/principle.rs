//! Conservative deterministic inference.
//!
//! Links between Tier-1 ASes are peerings. Every link strictly after the hop
//! leaving the last Tier-1 AS of a path is p2c (phase I). Phase II then
//! rescans all paths: once a path has gone downhill (a hop already known to
//! be p2c in traversal direction, or a Tier-1 peering), every later hop is
//! p2c too. Rescans repeat until nothing changes. A link that receives both
//! orientations is a conflict.
//!
//! Derivations are kept as directed facts `(link, provider)` and a
//! conflicting link keeps anchoring with both of its facts, so the fact set
//! only grows when paths are added. That makes the result monotone in the
//! input: removing paths can never flip p2c into c2p.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::paths::{AsPath, Asn, Link, Relationship, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinkState {
    Undecided,
    P2P,
    P2C { provider: Asn },
    Conflict,
}

impl LinkState {
    pub fn is_decided(self) -> bool {
        matches!(self, LinkState::P2P | LinkState::P2C { .. })
    }

    pub fn label(self) -> &'static str {
        match self {
            LinkState::Undecided => "undecided",
            LinkState::P2P => "p2p",
            LinkState::P2C { .. } => "p2c",
            LinkState::Conflict => "conflict",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Clique,
    I,
    II,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Clique => "clique",
            Phase::I => "I",
            Phase::II => "II",
        })
    }
}

/// One p2c inference made on one path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Derivation {
    pub link: Link,
    pub provider: Asn,
    pub source_path: usize,
    pub phase: Phase,
    pub iteration: usize,
}

/// Per-link relationship state over a topology.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelLabeling {
    pub states: BTreeMap<Link, LinkState>,
    /// Phase in which the current non-undecided state was established.
    pub provenance: BTreeMap<Link, Phase>,
}

impl RelLabeling {
    pub fn undecided(links: impl IntoIterator<Item = Link>) -> RelLabeling {
        RelLabeling {
            states: links.into_iter().map(|l| (l, LinkState::Undecided)).collect(),
            provenance: BTreeMap::new(),
        }
    }

    pub fn state(&self, link: &Link) -> LinkState {
        self.states.get(link).copied().unwrap_or(LinkState::Undecided)
    }

    /// Decided relationship of the hop `from -> to`, if any.
    pub fn hop(&self, from: Asn, to: Asn) -> Option<Relationship> {
        let link = Link::new(from, to)?;
        match self.state(&link) {
            LinkState::P2P => Some(Relationship::P2P),
            LinkState::P2C { provider } if provider == from => Some(Relationship::P2C),
            LinkState::P2C { .. } => Some(Relationship::C2P),
            _ => None,
        }
    }

    /// Whether `provider -> other` is a known p2c fact (conflicts carry both).
    fn has_fact(&self, link: &Link, provider: Asn) -> bool {
        match self.state(link) {
            LinkState::P2C { provider: p } => p == provider,
            LinkState::Conflict => true,
            _ => false,
        }
    }

    fn add_fact(&mut self, link: Link, provider: Asn, phase: Phase) -> bool {
        let next = match self.state(&link) {
            LinkState::Undecided => LinkState::P2C { provider },
            LinkState::P2C { provider: p } if p != provider => LinkState::Conflict,
            _ => return false,
        };
        self.states.insert(link, next);
        self.provenance.insert(link, phase);
        true
    }

    pub fn count(&self, pred: impl Fn(LinkState) -> bool) -> usize {
        self.states.values().filter(|s| pred(**s)).count()
    }

    pub fn decided_links(&self) -> BTreeSet<Link> {
        self.states.iter().filter(|(_, s)| s.is_decided()).map(|(l, _)| *l).collect()
    }

    /// CSV `u,v,label,provider,phase`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "u,v,label,provider,phase")?;
        for (link, state) in &self.states {
            let provider = match state {
                LinkState::P2C { provider } => provider.to_string(),
                _ => String::new(),
            };
            let phase = self.provenance.get(link).map(Phase::to_string).unwrap_or_default();
            writeln!(out, "{},{},{},{},{}", link.u(), link.v(), state.label(), provider, phase)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrincipleConfig {
    /// Run the iterative phase II; disabled this is the PARI* variant.
    pub phase2: bool,
    /// A Tier-1 peering inside a path also starts the downhill segment.
    pub p2p_anchor: bool,
    pub max_iterations: usize,
}

impl Default for PrincipleConfig {
    fn default() -> Self {
        PrincipleConfig { phase2: true, p2p_anchor: true, max_iterations: 1000 }
    }
}

impl PrincipleConfig {
    pub fn pari_star() -> Self {
        PrincipleConfig { phase2: false, ..Default::default() }
    }
}

#[derive(Debug, Clone)]
pub struct PrincipleOutput {
    pub labeling: RelLabeling,
    pub derivations: Vec<Derivation>,
    pub phase2_iterations: usize,
}

fn path_links(paths: &[AsPath]) -> BTreeSet<Link> {
    paths.iter().flat_map(AsPath::links).collect()
}

/// Every observed link between two Tier-1 ASes is a peering.
pub fn infer_clique_p2p(topology: &Topology, tier1: &BTreeSet<Asn>) -> RelLabeling {
    let mut labeling = RelLabeling::undecided(topology.links.keys().copied());
    for (link, state) in labeling.states.iter_mut() {
        if tier1.contains(&link.u()) && tier1.contains(&link.v()) {
            *state = LinkState::P2P;
            labeling.provenance.insert(*link, Phase::Clique);
        }
    }
    labeling
}

pub fn phase1_p2c(paths: &[AsPath], tier1: &BTreeSet<Asn>) -> Vec<Derivation> {
    let mut out = Vec::new();
    for (idx, path) in paths.iter().enumerate() {
        let Some(h) = path.asns.iter().rposition(|a| tier1.contains(a)) else { continue };
        // hops strictly after v_{h+1}
        for i in (h + 1)..path.asns.len().saturating_sub(1) {
            let (a, b) = (path.asns[i], path.asns[i + 1]);
            if let Some(link) = Link::new(a, b) {
                out.push(Derivation { link, provider: a, source_path: idx, phase: Phase::I, iteration: 0 });
            }
        }
    }
    out
}

/// Fold derivations into a labeling: one orientation gives p2c, both give a
/// conflict. Tier-1 peerings in `base` are never overwritten.
pub fn consolidate(base: &RelLabeling, derivations: &[Derivation]) -> RelLabeling {
    let mut labeling = base.clone();
    for d in derivations {
        if labeling.state(&d.link) == LinkState::P2P {
            continue;
        }
        labeling.add_fact(d.link, d.provider, d.phase);
    }
    labeling
}

/// Downhill derivations of one path under the anchors in `labeling`.
fn scan_path(path: &AsPath, idx: usize, labeling: &RelLabeling, p2p_anchor: bool, iteration: usize) -> Vec<Derivation> {
    let mut out = Vec::new();
    let mut downhill = false;
    for (a, b) in path.hops() {
        let Some(link) = Link::new(a, b) else { continue };
        let state = labeling.state(&link);
        if downhill && state != LinkState::P2P && !labeling.has_fact(&link, a) {
            out.push(Derivation { link, provider: a, source_path: idx, phase: Phase::II, iteration });
        }
        if labeling.has_fact(&link, a) || (p2p_anchor && state == LinkState::P2P) {
            downhill = true;
        }
    }
    out
}

/// Iterate phase II to a fixpoint. The returned count includes the final
/// iteration that added nothing.
pub fn phase2_propagate(
    paths: &[AsPath],
    labeling: &RelLabeling,
    config: &PrincipleConfig,
) -> Result<(RelLabeling, Vec<Derivation>, usize)> {
    use rayon::prelude::*;

    let mut current = labeling.clone();
    let mut all = Vec::new();
    for iteration in 1..=config.max_iterations {
        let found: Vec<Derivation> = paths
            .par_iter()
            .enumerate()
            .flat_map_iter(|(idx, p)| scan_path(p, idx, &current, config.p2p_anchor, iteration))
            .collect();
        let mut changed = false;
        for d in &found {
            changed |= current.add_fact(d.link, d.provider, Phase::II);
        }
        all.extend(found);
        if !changed {
            return Ok((current, all, iteration));
        }
    }
    Err(Error::IterationCap(config.max_iterations))
}

pub fn run_principle(paths: &[AsPath], tier1: &BTreeSet<Asn>, config: &PrincipleConfig) -> Result<PrincipleOutput> {
    let mut base = RelLabeling::undecided(path_links(paths));
    for (link, state) in base.states.iter_mut() {
        if tier1.contains(&link.u()) && tier1.contains(&link.v()) {
            *state = LinkState::P2P;
            base.provenance.insert(*link, Phase::Clique);
        }
    }
    let mut derivations = phase1_p2c(paths, tier1);
    let labeling = consolidate(&base, &derivations);
    if !config.phase2 {
        return Ok(PrincipleOutput { labeling, derivations, phase2_iterations: 0 });
    }
    let (labeling, more, iterations) = phase2_propagate(paths, &labeling, config)?;
    derivations.extend(more);
    log::info!(
        "principle step: {} p2p, {} p2c, {} conflict, {} undecided after {} phase II iterations",
        labeling.count(|s| s == LinkState::P2P),
        labeling.count(|s| matches!(s, LinkState::P2C { .. })),
        labeling.count(|s| s == LinkState::Conflict),
        labeling.count(|s| s == LinkState::Undecided),
        iterations
    );
    Ok(PrincipleOutput { labeling, derivations, phase2_iterations: iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::build_topology;

    fn asn(v: u32) -> Asn {
        Asn::new(v).unwrap()
    }

    fn t1(v: &[u32]) -> BTreeSet<Asn> {
        v.iter().map(|&a| asn(a)).collect()
    }

    fn p(v: &[u32]) -> AsPath {
        AsPath::from_u32s("c", v)
    }

    #[test]
    fn clique() {
        let paths = [p(&[1, 2, 10]), p(&[3, 11])];
        let lab = infer_clique_p2p(&build_topology(&paths), &t1(&[1, 2, 3, 4]));
        assert_eq!(lab.state(&Link::from_u32s(1, 2)), LinkState::P2P);
        assert_eq!(lab.state(&Link::from_u32s(2, 10)), LinkState::Undecided);
        // 1-4 never observed
        assert!(!lab.states.contains_key(&Link::from_u32s(1, 4)));
    }

    #[test]
    fn phase1_rules() {
        let d = phase1_p2c(&[p(&[1, 10, 11, 12])], &t1(&[1]));
        let got: Vec<_> = d.iter().map(|d| (d.link, d.provider)).collect();
        assert_eq!(got, vec![(Link::from_u32s(10, 11), asn(10)), (Link::from_u32s(11, 12), asn(11))]);

        assert!(phase1_p2c(&[p(&[10, 11, 12])], &t1(&[1])).is_empty());

        let d = phase1_p2c(&[p(&[1, 2, 10, 11])], &t1(&[1, 2]));
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].link, Link::from_u32s(10, 11));
    }

    #[test]
    fn consolidation() {
        let base = RelLabeling::undecided([Link::from_u32s(1, 2), Link::from_u32s(2, 3)]);
        let mk = |a, b, prov| Derivation {
            link: Link::from_u32s(a, b),
            provider: asn(prov),
            source_path: 0,
            phase: Phase::I,
            iteration: 0,
        };
        let lab = consolidate(&base, &[mk(1, 2, 1)]);
        assert_eq!(lab.state(&Link::from_u32s(1, 2)), LinkState::P2C { provider: asn(1) });
        assert_eq!(lab.state(&Link::from_u32s(2, 3)), LinkState::Undecided);
        let lab = consolidate(&base, &[mk(1, 2, 1), mk(1, 2, 2)]);
        assert_eq!(lab.state(&Link::from_u32s(1, 2)), LinkState::Conflict);
    }

    #[test]
    fn phase2_first_iteration() {
        // v_{h+1}=10, v_{h+2}=11, v_w=12
        let paths = [p(&[1, 9, 10, 11]), p(&[10, 11, 12])];
        let out = run_principle(&paths, &t1(&[1]), &PrincipleConfig::default()).unwrap();
        assert_eq!(out.labeling.state(&Link::from_u32s(11, 12)), LinkState::P2C { provider: asn(11) });
        assert!(out
            .derivations
            .iter()
            .any(|d| d.link == Link::from_u32s(11, 12) && d.phase == Phase::II && d.iteration == 1));
        assert_eq!(out.phase2_iterations, 2);
    }

    #[test]
    fn phase2_no_anchor_single_iteration() {
        let paths = [p(&[10, 11, 12]), p(&[12, 13])];
        let lab = RelLabeling::undecided(path_links(&paths));
        let (after, found, iters) = phase2_propagate(&paths, &lab, &PrincipleConfig::default()).unwrap();
        assert_eq!(iters, 1);
        assert!(found.is_empty());
        assert_eq!(after, lab);
    }

    #[test]
    fn chain_of_paths_counts_iterations() {
        // P_1 = [T, a1, a2, a3] is resolved by phase I; P_i = [a_i, a_{i+1}, a_{i+2}]
        // for i = 2..=k each unlock the next one.
        for k in 1..8u32 {
            let mut paths = vec![p(&[1, 101, 102, 103])];
            for i in 2..=k {
                paths.push(p(&[100 + i, 101 + i, 102 + i]));
            }
            let out = run_principle(&paths, &t1(&[1]), &PrincipleConfig::default()).unwrap();
            assert_eq!(out.phase2_iterations as u32, k, "k={k}");
            assert_eq!(out.labeling.count(|s| matches!(s, LinkState::P2C { .. })) as u32, k + 1);
        }
    }

    #[test]
    fn all_tier1_path_is_peering() {
        let out = run_principle(&[p(&[1, 2, 3])], &t1(&[1, 2, 3]), &PrincipleConfig::default()).unwrap();
        assert!(out.labeling.states.values().all(|s| *s == LinkState::P2P));
    }

    #[test]
    fn p2p_anchor_extension() {
        let paths = [p(&[1, 2, 10, 11])];
        let on = run_principle(&paths, &t1(&[1, 2]), &PrincipleConfig::default()).unwrap();
        assert_eq!(on.labeling.state(&Link::from_u32s(2, 10)), LinkState::P2C { provider: asn(2) });
        let off = PrincipleConfig { p2p_anchor: false, ..Default::default() };
        let off = run_principle(&paths, &t1(&[1, 2]), &off).unwrap();
        assert_eq!(off.labeling.state(&Link::from_u32s(2, 10)), LinkState::Undecided);
    }

    #[test]
    fn conflict_and_monotonicity() {
        // 10-11 is derived in both orientations
        let paths = [p(&[1, 9, 10, 11]), p(&[2, 8, 11, 10])];
        let out = run_principle(&paths, &t1(&[1, 2]), &PrincipleConfig::default()).unwrap();
        assert_eq!(out.labeling.state(&Link::from_u32s(10, 11)), LinkState::Conflict);

        // Removing the second path turns the conflict back into a p2c, never
        // into the opposite orientation.
        let sub = run_principle(&paths[..1], &t1(&[1, 2]), &PrincipleConfig::default()).unwrap();
        assert_eq!(sub.labeling.state(&Link::from_u32s(10, 11)), LinkState::P2C { provider: asn(10) });
    }

    #[test]
    fn csv_export() {
        let out = run_principle(&[p(&[1, 2, 10, 11])], &t1(&[1, 2]), &PrincipleConfig::default()).unwrap();
        let mut buf = Vec::new();
        out.labeling.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "u,v,label,provider,phase\n1,2,p2p,,clique\n2,10,p2c,2,II\n10,11,p2c,10,I\n");
    }
}
