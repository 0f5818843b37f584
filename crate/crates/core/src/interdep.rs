//! Interdependence graph over the links the principle step left open, and
//! the valley-free constraints each connected component has to satisfy.
//!
//! Constraints are three-valued: every node takes one of c2p/p2p/p2c in its
//! link's canonical orientation. Two kinds exist:
//!
//! * domain restrictions, from a decided hop right before or after the node;
//! * adjacency implications between two open hops that are consecutive in a
//!   path: "first is p2p or p2c in traversal direction => second is p2c".
//!
//! Applied to every consecutive hop pair, the adjacency rule is exactly the
//! valley-free pattern, so these are all the constraints a path imposes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use petgraph::unionfind::UnionFind;

use crate::paths::{hop_pair_ok, AsPath, Asn, Link, RelSet, Relationship};
use crate::principle::{LinkState, RelLabeling};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InterdepGraph {
    pub nodes: Vec<Link>,
    pub index: BTreeMap<Link, usize>,
    /// `(i, j)` with `i < j` mapped to the paths containing both links.
    pub arcs: BTreeMap<(usize, usize), BTreeSet<usize>>,
    /// Paths containing each node.
    pub node_paths: Vec<BTreeSet<usize>>,
}

impl InterdepGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.arcs.keys().filter(|(a, b)| *a == node || *b == node).count()
    }
}

fn is_open(state: LinkState) -> bool {
    matches!(state, LinkState::Undecided | LinkState::Conflict)
}

pub fn build_graph(paths: &[AsPath], labeling: &RelLabeling) -> InterdepGraph {
    let mut g = InterdepGraph::default();
    for (link, state) in &labeling.states {
        if is_open(*state) {
            g.index.insert(*link, g.nodes.len());
            g.nodes.push(*link);
        }
    }
    g.node_paths = vec![BTreeSet::new(); g.nodes.len()];
    for (pi, path) in paths.iter().enumerate() {
        let on_path: BTreeSet<usize> = path.links().filter_map(|l| g.index.get(&l).copied()).collect();
        for &n in &on_path {
            g.node_paths[n].insert(pi);
        }
        let on_path: Vec<usize> = on_path.into_iter().collect();
        for (k, &a) in on_path.iter().enumerate() {
            for &b in &on_path[k + 1..] {
                g.arcs.entry((a, b)).or_default().insert(pi);
            }
        }
    }
    g
}

/// Domain restriction on one node, in the link's canonical orientation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct UnaryConstraint {
    pub node: usize,
    pub allowed: RelSet,
    pub paths: BTreeSet<usize>,
}

/// "label(first) in {p2p, p2c} => label(second) = p2c", with labels taken in
/// path traversal direction. `*_forward` says whether traversal follows the
/// node's canonical `u -> v` orientation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct AdjacencyConstraint {
    pub first: usize,
    pub first_forward: bool,
    pub second: usize,
    pub second_forward: bool,
    pub paths: BTreeSet<usize>,
}

impl AdjacencyConstraint {
    pub fn arc(&self) -> (usize, usize) {
        (self.first.min(self.second), self.first.max(self.second))
    }

    /// Whether canonical labels `(a, b)` of `(first, second)` satisfy it.
    pub fn allows(&self, first: Relationship, second: Relationship) -> bool {
        let a = if self.first_forward { first } else { first.reverse() };
        let b = if self.second_forward { second } else { second.reverse() };
        hop_pair_ok(a, b)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    /// Hard per-node domain: all three labels, or c2p/p2c for conflicts.
    pub base: Vec<RelSet>,
    pub unary: Vec<UnaryConstraint>,
    pub adjacency: Vec<AdjacencyConstraint>,
}

impl ConstraintSet {
    pub fn len(&self) -> usize {
        self.unary.len() + self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Domains after applying every restriction.
    pub fn domains(&self) -> Vec<RelSet> {
        let mut d = self.base.clone();
        for u in &self.unary {
            d[u.node] = d[u.node].intersect(u.allowed);
        }
        d
    }

    /// Whether a full canonical assignment satisfies every constraint.
    pub fn satisfied_by(&self, assignment: &[Relationship]) -> bool {
        self.base.iter().zip(assignment).all(|(d, r)| d.contains(*r))
            && self.unary.iter().all(|u| u.allowed.contains(assignment[u.node]))
            && self.adjacency.iter().all(|a| a.allows(assignment[a.first], assignment[a.second]))
    }
}

/// Connected set of interdependent open links. Node indices are local to
/// the component; `links[i]` is the link behind node `i`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Component {
    pub id: usize,
    pub links: Vec<Link>,
    pub arcs: BTreeMap<(usize, usize), BTreeSet<usize>>,
    /// Paths containing each node.
    pub node_paths: Vec<BTreeSet<usize>>,
    /// Union of `node_paths`.
    pub paths: BTreeSet<usize>,
    pub constraints: ConstraintSet,
    pub trivial: bool,
}

impl Component {
    pub fn size(&self) -> usize {
        self.links.len()
    }

    pub fn local(&self, link: &Link) -> Option<usize> {
        self.links.binary_search(link).ok()
    }
}

/// Partition of the graph into maximal connected node sets, ordered by
/// their smallest link. Constraints are left empty; see [`encode`].
pub fn components(graph: &InterdepGraph) -> Vec<Component> {
    let mut uf = UnionFind::<usize>::new(graph.nodes.len());
    for &(a, b) in graph.arcs.keys() {
        uf.union(a, b);
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for n in 0..graph.nodes.len() {
        groups.entry(uf.find(n)).or_default().push(n);
    }
    let mut by_first: Vec<Vec<usize>> = groups.into_values().collect();
    by_first.sort_by_key(|g| graph.nodes[g[0]]);

    // Links are sorted and graph node order follows link order, so local
    // order is link order.
    let mut comp_of = vec![(0usize, 0usize); graph.nodes.len()];
    let mut out: Vec<Component> = by_first
        .iter()
        .enumerate()
        .map(|(cid, nodes)| {
            for (li, &n) in nodes.iter().enumerate() {
                comp_of[n] = (cid, li);
            }
            Component {
                id: cid,
                links: nodes.iter().map(|&n| graph.nodes[n]).collect(),
                node_paths: nodes.iter().map(|&n| graph.node_paths[n].clone()).collect(),
                paths: nodes.iter().flat_map(|&n| graph.node_paths[n].iter().copied()).collect(),
                trivial: nodes.len() == 1,
                ..Default::default()
            }
        })
        .collect();
    for (&(a, b), support) in &graph.arcs {
        let (ca, la) = comp_of[a];
        let (_, lb) = comp_of[b];
        out[ca].arcs.insert((la.min(lb), la.max(lb)), support.clone());
    }
    out
}

enum Hop {
    Open {
        node: usize,
        forward: bool,
    },
    Decided(Relationship),
    /// Open link outside this component (its arcs were relaxed away).
    Foreign,
}

fn classify(component: &Component, labeling: &RelLabeling, a: Asn, b: Asn) -> Option<Hop> {
    let link = Link::new(a, b)?;
    if let Some(node) = component.local(&link) {
        return Some(Hop::Open { node, forward: link.is_forward_from(a) });
    }
    Some(match labeling.hop(a, b) {
        Some(rel) => Hop::Decided(rel),
        None => Hop::Foreign,
    })
}

/// Valley-free constraints the component's supporting paths impose.
pub fn encode(component: &Component, paths: &[AsPath], labeling: &RelLabeling) -> ConstraintSet {
    let base: Vec<RelSet> = component
        .links
        .iter()
        .map(|l| if labeling.state(l) == LinkState::Conflict { RelSet::TRANSIT } else { RelSet::ALL })
        .collect();

    let mut unary: BTreeMap<(usize, RelSet), BTreeSet<usize>> = BTreeMap::new();
    let mut adjacency: BTreeMap<(usize, bool, usize, bool), BTreeSet<usize>> = BTreeMap::new();
    let downhill = RelSet::only(Relationship::P2C);
    let uphill = RelSet::only(Relationship::C2P);

    for &pi in &component.paths {
        let hops: Vec<Hop> = paths[pi].hops().filter_map(|(a, b)| classify(component, labeling, a, b)).collect();
        for pair in hops.windows(2) {
            match (&pair[0], &pair[1]) {
                (Hop::Open { node: a, forward: fa }, Hop::Open { node: b, forward: fb }) => {
                    adjacency.entry((*a, *fa, *b, *fb)).or_default().insert(pi);
                }
                (Hop::Decided(rel), Hop::Open { node, forward }) => {
                    if matches!(rel, Relationship::P2P | Relationship::P2C) {
                        let allowed = if *forward { downhill } else { downhill.reverse() };
                        unary.entry((*node, allowed)).or_default().insert(pi);
                    }
                }
                (Hop::Open { node, forward }, Hop::Decided(rel)) => {
                    if matches!(rel, Relationship::C2P | Relationship::P2P) {
                        let allowed = if *forward { uphill } else { uphill.reverse() };
                        unary.entry((*node, allowed)).or_default().insert(pi);
                    }
                }
                _ => {}
            }
        }
    }

    ConstraintSet {
        base,
        unary: unary.into_iter().map(|((node, allowed), paths)| UnaryConstraint { node, allowed, paths }).collect(),
        adjacency: adjacency
            .into_iter()
            .map(|((first, first_forward, second, second_forward), paths)| AdjacencyConstraint {
                first,
                first_forward,
                second,
                second_forward,
                paths,
            })
            .collect(),
    }
}

/// Components of the graph with their constraints filled in.
pub fn encoded_components(graph: &InterdepGraph, paths: &[AsPath], labeling: &RelLabeling) -> Vec<Component> {
    let mut comps = components(graph);
    for c in &mut comps {
        c.constraints = encode(c, paths, labeling);
    }
    comps
}

fn paths_str(p: &BTreeSet<usize>) -> String {
    p.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

/// Human-readable listing of nodes, arcs and constraints.
pub fn dump_component(c: &Component) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "component {} size {}{}", c.id, c.size(), if c.trivial { " trivial" } else { "" });
    for (i, l) in c.links.iter().enumerate() {
        let _ = writeln!(s, "  node {i} {l} domain {}", c.constraints.base.get(i).copied().unwrap_or(RelSet::ALL));
    }
    for ((a, b), p) in &c.arcs {
        let _ = writeln!(s, "  arc {a}-{b} paths [{}]", paths_str(p));
    }
    for u in &c.constraints.unary {
        let _ = writeln!(s, "  restrict node {} to {} paths [{}]", u.node, u.allowed, paths_str(&u.paths));
    }
    for a in &c.constraints.adjacency {
        let _ = writeln!(
            s,
            "  imply node {}{} in {{p2p,p2c}} => node {}{} = p2c paths [{}]",
            a.first,
            if a.first_forward { "" } else { "'" },
            a.second,
            if a.second_forward { "" } else { "'" },
            paths_str(&a.paths)
        );
    }
    s
}
