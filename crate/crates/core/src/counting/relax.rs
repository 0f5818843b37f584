//! Relaxation of unsatisfiable components.
//!
//! A maximum-satisfiability assignment names a smallest set of domain
//! restrictions and arcs whose removal leaves the rest satisfiable. Those
//! restrictions are dropped and those arcs removed with all their adjacency
//! implications.
//! The remaining arcs are re-split into components, and any piece that is
//! still unsatisfiable goes through another round.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use num_traits::Zero;
use petgraph::unionfind::UnionFind;

use super::count_models;
use super::maxsat::{max_sat, SoftClause};
use crate::error::{Error, Result};
use crate::interdep::{Component, ConstraintSet};
use crate::paths::{Link, RelSet};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RemovedArc {
    pub first: Link,
    pub second: Link,
    /// Paths containing both links.
    pub paths: BTreeSet<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DroppedRestriction {
    pub link: Link,
    pub allowed: RelSet,
    pub paths: BTreeSet<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RelaxationReport {
    /// Unsatisfiable components handed to relaxation.
    pub components_relaxed: usize,
    /// Relaxation steps that split a component into several.
    pub components_split: usize,
    pub arcs_removed: Vec<RemovedArc>,
    pub restrictions_dropped: Vec<DroppedRestriction>,
    pub rounds: usize,
    /// Component size -> number of components of that size.
    pub size_histogram: BTreeMap<usize, usize>,
}

impl RelaxationReport {
    pub fn merge(&mut self, other: RelaxationReport) {
        self.components_relaxed += other.components_relaxed;
        self.components_split += other.components_split;
        self.arcs_removed.extend(other.arcs_removed);
        self.restrictions_dropped.extend(other.restrictions_dropped);
        self.rounds += other.rounds;
        for (k, v) in other.size_histogram {
            *self.size_histogram.entry(k).or_default() += v;
        }
    }
}

fn paths_str(p: &BTreeSet<usize>) -> String {
    p.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

impl fmt::Display for RelaxationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "components_relaxed: {}", self.components_relaxed)?;
        writeln!(f, "components_split: {}", self.components_split)?;
        writeln!(f, "arcs_removed: {}", self.arcs_removed.len())?;
        writeln!(f, "restrictions_dropped: {}", self.restrictions_dropped.len())?;
        writeln!(f, "rounds: {}", self.rounds)?;
        for a in &self.arcs_removed {
            writeln!(f, "arc {} {} paths [{}]", a.first, a.second, paths_str(&a.paths))?;
        }
        for r in &self.restrictions_dropped {
            writeln!(f, "restriction {} {} paths [{}]", r.link, r.allowed, paths_str(&r.paths))?;
        }
        for (size, n) in &self.size_histogram {
            writeln!(f, "size {size}: {n}")?;
        }
        Ok(())
    }
}

/// Connected pieces of `c` under its current arcs, with local indices
/// renumbered in link order.
pub(crate) fn split(c: &Component) -> Vec<Component> {
    let n = c.size();
    let mut uf = UnionFind::<usize>::new(n);
    for &(a, b) in c.arcs.keys() {
        uf.union(a, b);
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for v in 0..n {
        groups.entry(uf.find(v)).or_default().push(v);
    }
    let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
    groups.sort_by_key(|g| g[0]);

    let mut place = vec![(0usize, 0usize); n];
    for (gi, g) in groups.iter().enumerate() {
        for (li, &v) in g.iter().enumerate() {
            place[v] = (gi, li);
        }
    }
    let mut out: Vec<Component> = groups
        .iter()
        .map(|g| Component {
            id: c.id,
            links: g.iter().map(|&v| c.links[v]).collect(),
            node_paths: g.iter().map(|&v| c.node_paths.get(v).cloned().unwrap_or_default()).collect(),
            paths: g.iter().flat_map(|&v| c.node_paths.get(v).into_iter().flatten().copied()).collect(),
            trivial: g.len() == 1,
            constraints: ConstraintSet {
                base: g.iter().map(|&v| c.constraints.base[v]).collect(),
                ..Default::default()
            },
            ..Default::default()
        })
        .collect();
    for (&(a, b), p) in &c.arcs {
        let (ga, la) = place[a];
        let (_, lb) = place[b];
        out[ga].arcs.insert((la, lb), p.clone());
    }
    for u in &c.constraints.unary {
        let (g, l) = place[u.node];
        let mut u = u.clone();
        u.node = l;
        out[g].constraints.unary.push(u);
    }
    for a in &c.constraints.adjacency {
        let (g, l1) = place[a.first];
        let (g2, l2) = place[a.second];
        debug_assert_eq!(g, g2, "adjacency constraint across pieces");
        let mut a = a.clone();
        a.first = l1;
        a.second = l2;
        out[g].constraints.adjacency.push(a);
    }
    out
}

/// Satisfiable pieces of an unsatisfiable component.
pub fn relax(component: &Component, seed: u64) -> Result<(Vec<Component>, RelaxationReport)> {
    if !count_models(component).is_zero() {
        return Err(Error::AlreadySatisfiable);
    }
    let budget = component.constraints.len();
    let mut report = RelaxationReport { components_relaxed: 1, ..Default::default() };
    let mut queue = VecDeque::from([component.clone()]);
    let mut done = Vec::new();

    while let Some(mut c) = queue.pop_front() {
        report.rounds += 1;
        if report.rounds > budget.max(1) {
            return Err(Error::Invalid("relaxation did not converge".into()));
        }
        let res = max_sat(&c.constraints, seed.wrapping_add(report.rounds as u64));

        let mut drop_unary = BTreeSet::new();
        let mut drop_arcs = BTreeSet::new();
        for clause in &res.unsatisfied {
            match *clause {
                SoftClause::Unary(i) => {
                    drop_unary.insert(i);
                }
                SoftClause::Arc(i, j) => {
                    drop_arcs.insert((i, j));
                }
            }
        }
        if drop_unary.is_empty() && drop_arcs.is_empty() {
            return Err(Error::Invalid("maximum-satisfiability search left nothing to relax".into()));
        }

        for &i in &drop_unary {
            let u = &c.constraints.unary[i];
            report.restrictions_dropped.push(DroppedRestriction {
                link: c.links[u.node],
                allowed: u.allowed,
                paths: u.paths.clone(),
            });
        }
        for arc in &drop_arcs {
            report.arcs_removed.push(RemovedArc {
                first: c.links[arc.0],
                second: c.links[arc.1],
                paths: c.arcs.get(arc).cloned().unwrap_or_default(),
            });
            c.arcs.remove(arc);
        }
        let mut k = 0;
        c.constraints.unary.retain(|_| {
            k += 1;
            !drop_unary.contains(&(k - 1))
        });
        c.constraints.adjacency.retain(|a| !drop_arcs.contains(&a.arc()));

        let pieces = split(&c);
        if pieces.len() > 1 {
            report.components_split += 1;
        }
        for p in pieces {
            if count_models(&p).is_zero() {
                queue.push_back(p);
            } else {
                done.push(p);
            }
        }
    }
    done.sort_by(|a, b| a.links.cmp(&b.links));
    for p in &done {
        *report.size_histogram.entry(p.size()).or_default() += 1;
    }
    Ok((done, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counting::exhaustive_min_cost;
    use crate::interdep::{build_graph, encoded_components};
    use crate::paths::{AsPath, Asn};
    use crate::principle::{LinkState, RelLabeling};

    /// `1 2 3 4`: 1-2 decided p2c from 1, 3-4 decided c2p (3 is the
    /// customer). Open 2-3 must be p2c after a downhill hop and c2p before an
    /// uphill one.
    fn valley() -> (Vec<AsPath>, RelLabeling) {
        let paths = vec![AsPath::from_u32s("c", &[1, 2, 3, 4])];
        let mut lab = RelLabeling::undecided(paths[0].links());
        lab.states.insert(Link::from_u32s(1, 2), LinkState::P2C { provider: Asn::new(1).unwrap() });
        lab.states.insert(Link::from_u32s(3, 4), LinkState::P2C { provider: Asn::new(4).unwrap() });
        (paths, lab)
    }

    #[test]
    fn drops_one_restriction() {
        let (paths, lab) = valley();
        let comp = &encoded_components(&build_graph(&paths, &lab), &paths, &lab)[0];
        assert!(count_models(comp).is_zero());
        let (pieces, report) = relax(comp, 7).unwrap();
        assert_eq!(pieces.len(), 1);
        assert_eq!(report.restrictions_dropped.len(), 1);
        assert!(report.arcs_removed.is_empty());
        assert_eq!(report.rounds, 1);
        assert_eq!(count_models(&pieces[0]), 1u32.into());
    }

    #[test]
    fn satisfiable_is_rejected() {
        let paths = vec![AsPath::from_u32s("c", &[1, 2, 3])];
        let lab = RelLabeling::undecided(paths[0].links());
        let comp = &encoded_components(&build_graph(&paths, &lab), &paths, &lab)[0];
        assert!(matches!(relax(comp, 0), Err(Error::AlreadySatisfiable)));
    }

    #[test]
    fn arc_removal_splits() {
        // open 2-3 and 3-4 between a downhill start and an uphill end:
        // some constraint among the three must go.
        let paths = vec![AsPath::from_u32s("c", &[1, 2, 3, 4, 5])];
        let mut lab = RelLabeling::undecided(paths[0].links());
        lab.states.insert(Link::from_u32s(1, 2), LinkState::P2C { provider: Asn::new(1).unwrap() });
        lab.states.insert(Link::from_u32s(4, 5), LinkState::P2C { provider: Asn::new(5).unwrap() });
        let comp = &encoded_components(&build_graph(&paths, &lab), &paths, &lab)[0];
        assert!(count_models(comp).is_zero());
        let min = exhaustive_min_cost(&comp.constraints);
        assert_eq!(min, 1);
        let (pieces, report) = relax(comp, 3).unwrap();
        assert_eq!(report.restrictions_dropped.len() + report.arcs_removed.len(), 1);
        assert!(pieces.iter().all(|p| !count_models(p).is_zero()));
        let total: usize = pieces.iter().map(Component::size).sum();
        assert_eq!(total, 2);
    }
}
