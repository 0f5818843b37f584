//! Unit-weight MAX-SAT over a component's constraints.
//!
//! Hard constraints are the per-node base domains (exactly one label, within
//! c2p/p2c for conflicts) and are always respected. Every domain restriction
//! is a soft clause of weight one, and so is every arc: the conjunction of all
//! adjacency implications between one pair of nodes. The optimum therefore
//! minimises the number of restrictions plus arcs relaxation has to remove. Up to
//! [`EXACT_LIMIT`] nodes the optimum is proven by branch and bound; beyond
//! that a seeded min-conflicts local search returns the best assignment found.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::interdep::ConstraintSet;
use crate::paths::Relationship;

pub const EXACT_LIMIT: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SoftClause {
    /// Index into `unary`.
    Unary(usize),
    /// Node pair `(i, j)`, `i < j`, standing for every adjacency
    /// implication between them.
    Arc(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxSatResult {
    pub assignment: Vec<Relationship>,
    pub unsatisfied: Vec<SoftClause>,
    /// Optimality proven.
    pub exact: bool,
}

struct Problem<'a> {
    cs: &'a ConstraintSet,
    clauses: Vec<SoftClause>,
    /// Adjacency indices behind each clause (empty for unary clauses).
    members: Vec<Vec<usize>>,
    by_var: Vec<Vec<usize>>,
    values: Vec<Vec<Relationship>>,
}

impl<'a> Problem<'a> {
    fn new(cs: &'a ConstraintSet) -> Problem<'a> {
        let n = cs.base.len();
        let mut arcs: std::collections::BTreeMap<(usize, usize), Vec<usize>> = Default::default();
        for (i, a) in cs.adjacency.iter().enumerate() {
            arcs.entry(a.arc()).or_default().push(i);
        }
        let mut clauses: Vec<SoftClause> = (0..cs.unary.len()).map(SoftClause::Unary).collect();
        let mut members = vec![Vec::new(); clauses.len()];
        for ((i, j), m) in arcs {
            clauses.push(SoftClause::Arc(i, j));
            members.push(m);
        }
        let mut by_var = vec![Vec::new(); n];
        for (ci, c) in clauses.iter().enumerate() {
            for v in Self::vars_of(cs, *c) {
                if !by_var[v].contains(&ci) {
                    by_var[v].push(ci);
                }
            }
        }
        let values = cs.base.iter().map(|d| d.iter().collect()).collect();
        Problem { cs, clauses, members, by_var, values }
    }

    fn vars_of(cs: &ConstraintSet, c: SoftClause) -> Vec<usize> {
        match c {
            SoftClause::Unary(i) => vec![cs.unary[i].node],
            SoftClause::Arc(i, j) => vec![i, j],
        }
    }

    fn violated(&self, ci: usize, asg: &[Relationship]) -> bool {
        match self.clauses[ci] {
            SoftClause::Unary(i) => {
                let u = &self.cs.unary[i];
                !u.allowed.contains(asg[u.node])
            }
            SoftClause::Arc(..) => self.members[ci].iter().any(|&i| {
                let a = &self.cs.adjacency[i];
                !a.allows(asg[a.first], asg[a.second])
            }),
        }
    }

    fn unsatisfied(&self, asg: &[Relationship]) -> Vec<SoftClause> {
        (0..self.clauses.len()).filter(|&c| self.violated(c, asg)).map(|c| self.clauses[c]).collect()
    }

    fn cost(&self, asg: &[Relationship]) -> usize {
        (0..self.clauses.len()).filter(|&c| self.violated(c, asg)).count()
    }
}

/// Min-conflicts walk with random restarts.
fn local_search(p: &Problem, seed: u64) -> (Vec<Relationship>, usize) {
    let n = p.values.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let restarts = 8;
    let steps = (200 * n + 2000).min(100_000);
    let noise = 0.2;

    let mut best: Vec<Relationship> = p.values.iter().map(|v| v[0]).collect();
    let mut best_cost = p.cost(&best);

    for _ in 0..restarts {
        if best_cost == 0 {
            break;
        }
        let mut asg: Vec<Relationship> = p.values.iter().map(|v| v[rng.gen_range(0..v.len())]).collect();
        let mut violated: Vec<bool> = (0..p.clauses.len()).map(|c| p.violated(c, &asg)).collect();
        let mut list: Vec<usize> = (0..p.clauses.len()).filter(|&c| violated[c]).collect();
        let mut pos: Vec<usize> = vec![usize::MAX; p.clauses.len()];
        for (k, &c) in list.iter().enumerate() {
            pos[c] = k;
        }

        for _ in 0..steps {
            if list.len() < best_cost {
                best_cost = list.len();
                best.clone_from(&asg);
            }
            if list.is_empty() {
                break;
            }
            let ci = list[rng.gen_range(0..list.len())];
            let vars = Problem::vars_of(p.cs, p.clauses[ci]);

            let delta = |asg: &mut Vec<Relationship>, v: usize, val: Relationship| -> isize {
                let old = asg[v];
                let before = p.by_var[v].iter().filter(|&&c| p.violated(c, asg)).count() as isize;
                asg[v] = val;
                let after = p.by_var[v].iter().filter(|&&c| p.violated(c, asg)).count() as isize;
                asg[v] = old;
                after - before
            };

            let choice = if rng.gen_bool(noise) {
                let v = vars[rng.gen_range(0..vars.len())];
                let opts: Vec<Relationship> = p.values[v].iter().copied().filter(|&r| r != asg[v]).collect();
                if opts.is_empty() {
                    continue;
                }
                (v, opts[rng.gen_range(0..opts.len())])
            } else {
                let mut pick: Option<(isize, usize, Relationship)> = None;
                for &v in &vars {
                    for &val in &p.values[v] {
                        if val == asg[v] {
                            continue;
                        }
                        let d = delta(&mut asg, v, val);
                        if pick.is_none_or(|(bd, _, _)| d < bd) {
                            pick = Some((d, v, val));
                        }
                    }
                }
                match pick {
                    Some((_, v, val)) => (v, val),
                    None => continue,
                }
            };

            let (v, val) = choice;
            asg[v] = val;
            for &c in &p.by_var[v] {
                let now = p.violated(c, &asg);
                if now != violated[c] {
                    violated[c] = now;
                    if now {
                        pos[c] = list.len();
                        list.push(c);
                    } else {
                        let k = pos[c];
                        let last = *list.last().unwrap();
                        list.swap_remove(k);
                        if last != c {
                            pos[last] = k;
                        }
                        pos[c] = usize::MAX;
                    }
                }
            }
        }
        if list.len() < best_cost {
            best_cost = list.len();
            best.clone_from(&asg);
        }
    }
    (best, best_cost)
}

struct BranchAndBound<'p, 'a> {
    p: &'p Problem<'a>,
    order: Vec<usize>,
    /// Clauses whose last variable in `order` sits at this position.
    closing: Vec<Vec<usize>>,
    /// Suffix sums of per-variable minimum unary violations.
    lower: Vec<usize>,
    asg: Vec<Relationship>,
    best: Vec<Relationship>,
    best_cost: usize,
}

impl BranchAndBound<'_, '_> {
    fn search(&mut self, depth: usize, cost: usize) {
        if cost + self.lower[depth] >= self.best_cost {
            return;
        }
        if depth == self.order.len() {
            self.best_cost = cost;
            self.best.clone_from(&self.asg);
            return;
        }
        let v = self.order[depth];
        let mut options: Vec<(usize, Relationship)> = self.p.values[v]
            .iter()
            .map(|&val| {
                self.asg[v] = val;
                let added = self.closing[depth].iter().filter(|&&c| self.p.violated(c, &self.asg)).count();
                (added, val)
            })
            .collect();
        options.sort();
        for (added, val) in options {
            self.asg[v] = val;
            self.search(depth + 1, cost + added);
        }
    }
}

fn bfs_order(cs: &ConstraintSet) -> Vec<usize> {
    let n = cs.base.len();
    let mut adj = vec![Vec::new(); n];
    for a in &cs.adjacency {
        adj[a.first].push(a.second);
        adj[a.second].push(a.first);
    }
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut k = order.len();
        order.push(s);
        while k < order.len() {
            let v = order[k];
            k += 1;
            let mut next = adj[v].clone();
            next.sort_unstable();
            for w in next {
                if !seen[w] {
                    seen[w] = true;
                    order.push(w);
                }
            }
        }
    }
    order
}

pub fn max_sat(cs: &ConstraintSet, seed: u64) -> MaxSatResult {
    let p = Problem::new(cs);
    let n = cs.base.len();
    let (ls, ls_cost) = local_search(&p, seed);
    if ls_cost == 0 || n > EXACT_LIMIT {
        return MaxSatResult { unsatisfied: p.unsatisfied(&ls), assignment: ls, exact: ls_cost == 0 };
    }

    let order = bfs_order(cs);
    let mut position = vec![0; n];
    for (k, &v) in order.iter().enumerate() {
        position[v] = k;
    }
    let mut closing = vec![Vec::new(); n];
    for ci in 0..p.clauses.len() {
        let last = Problem::vars_of(cs, p.clauses[ci]).into_iter().map(|v| position[v]).max().unwrap();
        closing[last].push(ci);
    }
    let min_unary: Vec<usize> = (0..n)
        .map(|v| {
            p.values[v]
                .iter()
                .map(|&val| cs.unary.iter().filter(|u| u.node == v && !u.allowed.contains(val)).count())
                .min()
                .unwrap_or(0)
        })
        .collect();
    let mut lower = vec![0usize; n + 1];
    for k in (0..n).rev() {
        lower[k] = lower[k + 1] + min_unary[order[k]];
    }

    let mut bb = BranchAndBound { p: &p, order, closing, lower, asg: ls.clone(), best: ls, best_cost: ls_cost };
    bb.search(0, 0);
    let assignment = bb.best;
    MaxSatResult { unsatisfied: p.unsatisfied(&assignment), assignment, exact: true }
}

/// Optimum by exhaustive enumeration; test oracle for tiny instances.
pub fn exhaustive_min_cost(cs: &ConstraintSet) -> usize {
    let p = Problem::new(cs);
    let n = cs.base.len();
    let mut idx = vec![0usize; n];
    let mut best = usize::MAX;
    loop {
        let asg: Vec<Relationship> = idx.iter().enumerate().map(|(v, &i)| p.values[v][i]).collect();
        best = best.min(p.cost(&asg));
        let mut pos = n;
        loop {
            if pos == 0 {
                return best;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < p.values[pos].len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interdep::{AdjacencyConstraint, UnaryConstraint};
    use crate::paths::RelSet;
    use std::collections::BTreeSet;
    use Relationship::*;

    fn unary(node: usize, r: Relationship) -> UnaryConstraint {
        UnaryConstraint { node, allowed: RelSet::only(r), paths: BTreeSet::new() }
    }

    fn adj(first: usize, second: usize) -> AdjacencyConstraint {
        AdjacencyConstraint { first, first_forward: true, second, second_forward: true, paths: BTreeSet::new() }
    }

    /// n1 forced p2c, n2 forced c2p, and n1 -> n2 adjacent on a path.
    fn contradiction(offset: usize) -> (Vec<UnaryConstraint>, Vec<AdjacencyConstraint>) {
        (vec![unary(offset, P2C), unary(offset + 1, C2P)], vec![adj(offset, offset + 1)])
    }

    #[test]
    fn satisfiable_has_no_unsatisfied() {
        let cs = ConstraintSet { base: vec![RelSet::ALL; 3], unary: vec![], adjacency: vec![adj(0, 1), adj(1, 2)] };
        let r = max_sat(&cs, 1);
        assert!(r.unsatisfied.is_empty());
        assert!(cs.satisfied_by(&r.assignment));
    }

    #[test]
    fn one_contradiction() {
        let (unary, adjacency) = contradiction(0);
        let cs = ConstraintSet { base: vec![RelSet::ALL; 2], unary, adjacency };
        assert_eq!(exhaustive_min_cost(&cs), 1);
        let r = max_sat(&cs, 7);
        assert!(r.exact);
        assert_eq!(r.unsatisfied.len(), 1);
    }

    #[test]
    fn two_contradictions() {
        let (mut u, mut a) = contradiction(0);
        let (u2, a2) = contradiction(2);
        u.extend(u2);
        a.extend(a2);
        let cs = ConstraintSet { base: vec![RelSet::ALL; 4], unary: u, adjacency: a };
        assert_eq!(exhaustive_min_cost(&cs), 2);
        assert_eq!(max_sat(&cs, 7).unsatisfied.len(), 2);
    }

    #[test]
    fn respects_hard_domains() {
        let cs = ConstraintSet { base: vec![RelSet::TRANSIT], unary: vec![unary(0, P2P)], adjacency: vec![] };
        let r = max_sat(&cs, 0);
        assert!(cs.base[0].contains(r.assignment[0]));
        assert_eq!(r.unsatisfied, vec![SoftClause::Unary(0)]);
    }

    #[test]
    fn local_search_large_chain_of_contradictions() {
        let k = 20;
        let mut u = Vec::new();
        let mut a = Vec::new();
        for i in 0..k {
            let (u2, a2) = contradiction(2 * i);
            u.extend(u2);
            a.extend(a2);
        }
        let cs = ConstraintSet { base: vec![RelSet::ALL; 2 * k], unary: u, adjacency: a };
        let r = max_sat(&cs, 3);
        assert!(!r.exact);
        assert_eq!(r.unsatisfied.len(), k);
        assert_eq!(r, max_sat(&cs, 3));
    }

    #[test]
    fn implications_on_one_arc_cost_one() {
        // 0 -> 1 and 1 -> 0 on two paths, both nodes forced into a valley
        let mut back = adj(1, 0);
        back.first_forward = false;
        back.second_forward = false;
        let cs = ConstraintSet {
            base: vec![RelSet::ALL; 2],
            unary: vec![unary(0, P2C), unary(0, P2C), unary(1, C2P), unary(1, C2P)],
            adjacency: vec![adj(0, 1), back],
        };
        assert_eq!(exhaustive_min_cost(&cs), 1);
        assert_eq!(max_sat(&cs, 0).unsatisfied, vec![SoftClause::Arc(0, 1)]);
    }
}
